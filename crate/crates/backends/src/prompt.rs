//! Multiple-choice instructions for generative backends and parsing of
//! their free-text answers.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;
use unisim_core::{MediaItem, Sample, TaskFamily, TaskKind};

pub const IMAGE_SLOT: &str = "<image>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub task: TaskKind,
    /// Text with `<image>` slots and `{name}` placeholders.
    pub body: String,
    pub options: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPrompt {
    pub instruction: String,
    /// Images in slot order.
    pub images: Vec<MediaItem>,
    pub options: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template for `{template}` cannot render a `{sample}` sample")]
    TaskMismatch { template: String, sample: String },
    #[error("placeholder `{{{0}}}` has no value for this task")]
    UnfilledPlaceholder(String),
    #[error("template has {got} image slots, task needs {expected}")]
    SlotCount { expected: usize, got: usize },
    #[error("no instruction template for task `{0}`")]
    Unsupported(String),
    #[error("sample has a text item where an image is required")]
    NotAnImage,
    #[error("sample has an image item where text is required")]
    NotAText,
}

const IMG_2AFC: &str = "Answer the following multiple-choice question:\nHere are three images: <image> <image> <image>.\nIf image 1 is the reference image, which image of the other two is more similar to the reference image?\nOptions:\n(A) Image 2\n(B) Image 3";
const IT_2AFC: &str = "Answer the following question:\nHere are two images: <image> <image>, and here is the reference caption: {prompt}. which of the two images is more aligned to the reference caption?\nOptions:\n(A) Image 1\n(B) Image 2";
const TEXT_2AFC: &str = "Answer the following multiple-choice question:\nGiven the reference image: <image> and two captions, caption 1: {caption1}, caption 2: {caption2}\nwhich caption has a better alignment with the reference image?\nOptions:\n(A) Caption 1\n(B) Caption 2";
const IQA: &str = "Answer the following multiple-choice question:\nGiven two images: <image> <image> which image has a better quality?\nOptions:\n(A) Image 1\n(B) Image 2";
const PAA: &str = "Answer the following multiple-choice question:\nGiven two images: <image> <image> which image is more {perceptual attribute}?\nOptions:\n(A) Image 1\n(B) Image 2";
const OOO: &str = "Answer the following multiple-choice question:\nHere are three images: <image> <image> <image>, Which one (A, B, C) is the odd-one-out of the group?\nOptions:\n(A) Image 1\n(B) Image 2\n(C) Image 3";

fn letters(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| ((b'A' + i as u8) as char).to_string())
        .collect()
}

/// Inference-time instruction for `task`. Retrieval has none.
pub fn default_template(task: TaskKind) -> Option<PromptTemplate> {
    let (body, n) = match task.family() {
        TaskFamily::Img2Afc => (IMG_2AFC, 2),
        TaskFamily::It2Afc => (IT_2AFC, 2),
        TaskFamily::Text2Afc => (TEXT_2AFC, 2),
        TaskFamily::Iqa => (IQA, 2),
        TaskFamily::Paa => (PAA, 2),
        TaskFamily::Ooo => (OOO, 3),
        TaskFamily::Retrieval => return None,
    };
    Some(PromptTemplate {
        task,
        body: body.to_string(),
        options: letters(n),
    })
}

/// How each option is named in the instruction body, in option order.
pub fn option_labels(task: TaskKind) -> Vec<&'static str> {
    match task.family() {
        TaskFamily::Img2Afc => vec!["Image 2", "Image 3"],
        TaskFamily::Text2Afc => vec!["Caption 1", "Caption 2"],
        TaskFamily::Ooo => vec!["Image 1", "Image 2", "Image 3"],
        _ => vec!["Image 1", "Image 2"],
    }
}

/// Number of `<image>` slots a task's instruction carries.
pub fn image_slots(task: TaskKind) -> Option<usize> {
    Some(match task.family() {
        TaskFamily::Img2Afc | TaskFamily::Ooo => 3,
        TaskFamily::It2Afc | TaskFamily::Iqa | TaskFamily::Paa => 2,
        TaskFamily::Text2Afc => 1,
        TaskFamily::Retrieval => return None,
    })
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z0-9_ ]+)\}").unwrap())
}

fn text_of(item: &MediaItem) -> Result<&str, PromptError> {
    item.as_text().ok_or(PromptError::NotAText)
}

fn require_images(items: &[&MediaItem]) -> Result<Vec<MediaItem>, PromptError> {
    items
        .iter()
        .map(|i| {
            if i.is_image() {
                Ok((*i).clone())
            } else {
                Err(PromptError::NotAnImage)
            }
        })
        .collect()
}

pub fn render_prompt(t: &PromptTemplate, s: &Sample) -> Result<RenderedPrompt, PromptError> {
    let task = s.task();
    if t.task.family() != task.family() {
        return Err(PromptError::TaskMismatch {
            template: t.task.to_string(),
            sample: task.to_string(),
        });
    }
    let expected = image_slots(task).ok_or_else(|| PromptError::Unsupported(task.to_string()))?;
    let got = t.body.matches(IMAGE_SLOT).count();
    if got != expected {
        return Err(PromptError::SlotCount { expected, got });
    }

    let mut values: Vec<(&str, String)> = Vec::new();
    let images = match s {
        Sample::Triplet(x) => {
            let [c0, c1] = &x.cand;
            match task.family() {
                TaskFamily::Img2Afc => require_images(&[&x.reference, c0, c1])?,
                TaskFamily::It2Afc => {
                    values.push(("prompt", text_of(&x.reference)?.to_string()));
                    require_images(&[c0, c1])?
                }
                TaskFamily::Text2Afc => {
                    values.push(("caption1", text_of(c0)?.to_string()));
                    values.push(("caption2", text_of(c1)?.to_string()));
                    require_images(&[&x.reference])?
                }
                TaskFamily::Iqa => require_images(&[c0, c1])?,
                TaskFamily::Paa => {
                    let attr = task.attribute().expect("PAA task carries an attribute");
                    values.push(("perceptual attribute", attr.adjective().to_string()));
                    require_images(&[c0, c1])?
                }
                _ => return Err(PromptError::Unsupported(task.to_string())),
            }
        }
        Sample::OddOneOut(x) => require_images(&x.items.iter().collect::<Vec<_>>())?,
        Sample::Retrieval(_) => return Err(PromptError::Unsupported(task.to_string())),
    };

    let re = placeholder_re();
    for cap in re.captures_iter(&t.body) {
        let name = &cap[1];
        if !values.iter().any(|(k, _)| *k == name) {
            return Err(PromptError::UnfilledPlaceholder(name.to_string()));
        }
    }
    let instruction = re
        .replace_all(&t.body, |cap: &regex::Captures| {
            values
                .iter()
                .find(|(k, _)| *k == &cap[1])
                .map(|(_, v)| v.clone())
                .unwrap_or_default()
        })
        .into_owned();

    Ok(RenderedPrompt {
        instruction,
        images,
        options: t.options.clone(),
    })
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseChoiceError {
    #[error("no option found in answer")]
    NoMatch,
    #[error("answer names several options: {0:?}")]
    Conflicting(Vec<usize>),
}

struct Tiers {
    paren: Regex,
    closing: Regex,
    option_word: Regex,
    bare: Regex,
}

fn tiers() -> &'static Tiers {
    static T: OnceLock<Tiers> = OnceLock::new();
    T.get_or_init(|| Tiers {
        paren: Regex::new(r"(?i)\(\s*([a-z])\s*\)").unwrap(),
        closing: Regex::new(r"(?i)(?:^|[^a-z0-9(])([a-z])\)").unwrap(),
        option_word: Regex::new(r"(?i)\boption\s+([a-z])\b").unwrap(),
        bare: Regex::new(r"\b([A-Z])\b").unwrap(),
    })
}

fn letter_index(c: &str, n: usize) -> Option<usize> {
    let b = c.to_ascii_uppercase().bytes().next()?;
    let i = b.checked_sub(b'A')? as usize;
    (i < n).then_some(i)
}

fn decide(found: BTreeSet<usize>) -> Option<Result<usize, ParseChoiceError>> {
    match found.len() {
        0 => None,
        1 => found.into_iter().next().map(Ok),
        _ => Some(Err(ParseChoiceError::Conflicting(
            found.into_iter().collect(),
        ))),
    }
}

fn parse_tiered(raw: &str, labels: &[Vec<String>]) -> Result<usize, ParseChoiceError> {
    let n = labels.len();
    let t = tiers();
    let by_letter = |res: &[&Regex]| -> BTreeSet<usize> {
        res.iter()
            .flat_map(|re| {
                re.captures_iter(raw)
                    .filter_map(|c| letter_index(&c[1], n))
                    .collect::<Vec<_>>()
            })
            .collect()
    };

    if let Some(r) = decide(by_letter(&[&t.paren])) {
        return r;
    }
    if let Some(r) = decide(by_letter(&[&t.closing, &t.option_word])) {
        return r;
    }
    let lower = raw.to_lowercase();
    let named: BTreeSet<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, names)| {
            names.iter().any(|name| {
                let re =
                    Regex::new(&format!(r"\b{}\b", regex::escape(&name.to_lowercase()))).unwrap();
                re.is_match(&lower)
            })
        })
        .map(|(i, _)| i)
        .collect();
    if let Some(r) = decide(named) {
        return r;
    }
    decide(by_letter(&[&t.bare])).unwrap_or(Err(ParseChoiceError::NoMatch))
}

/// Option index named by a free-text answer over `n_options` options.
///
/// Patterns are tried from most to least explicit: `(A)`, then `A)` or
/// `option A`, then `Image k` / `Caption k`, then a standalone capital
/// letter. The first pattern family that matches decides; if it names more
/// than one option the answer is [`ParseChoiceError::Conflicting`].
pub fn parse_choice(raw: &str, n_options: usize) -> Result<usize, ParseChoiceError> {
    let labels: Vec<Vec<String>> = (1..=n_options)
        .map(|k| vec![format!("Image {k}"), format!("Caption {k}")])
        .collect();
    parse_tiered(raw, &labels)
}

/// Like [`parse_choice`], with the option names used by a specific template
/// (see [`option_labels`]).
pub fn parse_choice_with(raw: &str, labels: &[&str]) -> Result<usize, ParseChoiceError> {
    let labels: Vec<Vec<String>> = labels.iter().map(|l| vec![l.to_string()]).collect();
    parse_tiered(raw, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use unisim_core::{OddOneOutSample, PerceptualAttribute, TripletSample, IQA_REFERENCE_PROMPT};

    fn img(s: &str) -> MediaItem {
        MediaItem::image(s)
    }

    fn render(s: Sample) -> RenderedPrompt {
        render_prompt(&default_template(s.task()).unwrap(), &s).unwrap()
    }

    #[test]
    fn iqa_instruction() {
        let s = TripletSample::new(
            TaskKind::Iqa,
            "d",
            MediaItem::text(IQA_REFERENCE_PROMPT),
            [img("a"), img("b")],
            0,
        );
        let r = render(s.into());
        assert!(r.instruction.contains("which image has a better quality?"));
        assert_eq!(r.images, vec![img("a"), img("b")]);
        assert_eq!(r.options, vec!["A", "B"]);
    }

    #[test]
    fn img2afc_puts_reference_first() {
        let s = TripletSample::new(TaskKind::Img2Afc, "d", img("r"), [img("a"), img("b")], 1);
        let r = render(s.into());
        assert!(r
            .instruction
            .contains("more similar to the reference image?"));
        assert_eq!(r.images, vec![img("r"), img("a"), img("b")]);
    }

    #[test]
    fn paa_substitutes_attribute() {
        let task = TaskKind::Paa(PerceptualAttribute::Brightness);
        let s = TripletSample::new(
            task,
            "d",
            MediaItem::text("A bright photo."),
            [img("a"), img("b")],
            0,
        );
        let r = render(s.into());
        assert!(
            r.instruction.contains("which image is more bright?"),
            "{}",
            r.instruction
        );
        assert!(!r.instruction.contains('{'));
    }

    #[test]
    fn text_and_prompt_placeholders() {
        let s = TripletSample::new(
            TaskKind::Text2Afc,
            "d",
            img("r"),
            [MediaItem::text("a dog {x}"), MediaItem::text("a cat")],
            0,
        );
        let r = render(s.into());
        assert!(r
            .instruction
            .contains("caption 1: a dog {x}, caption 2: a cat\n"));
        assert_eq!(r.images, vec![img("r")]);

        let s = TripletSample::new(
            TaskKind::It2Afc,
            "d",
            MediaItem::text("two birds"),
            [img("a"), img("b")],
            0,
        );
        assert!(render(s.into())
            .instruction
            .contains("reference caption: two birds. which"));
    }

    #[test]
    fn ooo_has_three_options() {
        let s = OddOneOutSample {
            dataset: "d".into(),
            items: [img("a"), img("b"), img("c")],
            odd: 2,
            meta: Default::default(),
        };
        let r = render(Sample::OddOneOut(s));
        assert_eq!(r.options, vec!["A", "B", "C"]);
        assert_eq!(r.images.len(), 3);
    }

    #[test]
    fn render_errors() {
        let s: Sample = TripletSample::new(
            TaskKind::Iqa,
            "d",
            MediaItem::text(IQA_REFERENCE_PROMPT),
            [img("a"), img("b")],
            0,
        )
        .into();
        let mut t = default_template(TaskKind::Iqa).unwrap();
        t.body.push_str(" {prompt}");
        assert_eq!(
            render_prompt(&t, &s),
            Err(PromptError::UnfilledPlaceholder("prompt".into()))
        );
        t.body = "<image> only".into();
        assert_eq!(
            render_prompt(&t, &s),
            Err(PromptError::SlotCount {
                expected: 2,
                got: 1
            })
        );
        let other = default_template(TaskKind::Img2Afc).unwrap();
        assert!(matches!(
            render_prompt(&other, &s),
            Err(PromptError::TaskMismatch { .. })
        ));
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_choice("(B) Image 2", 2), Ok(1));
        assert_eq!(parse_choice("The answer is A.", 2), Ok(0));
        assert_eq!(
            parse_choice("both look fine", 2),
            Err(ParseChoiceError::NoMatch)
        );
    }

    #[test]
    fn parse_tiers() {
        assert_eq!(parse_choice("(a)", 2), Ok(0));
        assert_eq!(parse_choice("B) because", 2), Ok(1));
        assert_eq!(parse_choice("I pick option b", 2), Ok(1));
        assert_eq!(parse_choice("image 2 looks sharper", 2), Ok(1));
        assert_eq!(parse_choice("Caption 1.", 2), Ok(0));
        assert_eq!(parse_choice("(C)", 3), Ok(2));
        // out-of-range letters are ignored
        assert_eq!(parse_choice("(C)", 2), Err(ParseChoiceError::NoMatch));
        assert_eq!(
            parse_choice("(A) or (B)", 2),
            Err(ParseChoiceError::Conflicting(vec![0, 1]))
        );
        // an explicit letter outranks a mentioned label
        assert_eq!(parse_choice("(A), since Image 2 is blurry", 2), Ok(0));
        assert_eq!(
            parse_choice("Image 1 and Image 2 are equal", 2),
            Err(ParseChoiceError::Conflicting(vec![0, 1]))
        );
        assert_eq!(parse_choice("a picture", 2), Err(ParseChoiceError::NoMatch));
    }

    #[test]
    fn parse_with_template_labels() {
        let labels = option_labels(TaskKind::Img2Afc);
        assert_eq!(parse_choice_with("Image 3 is closer", &labels), Ok(1));
        assert_eq!(
            parse_choice_with("Image 1 is the reference", &labels),
            Err(ParseChoiceError::NoMatch)
        );
    }
}

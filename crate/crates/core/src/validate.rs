use std::collections::HashSet;
use std::fmt;

use crate::media::{MediaItem, MediaKind};
use crate::sample::{Difficulty, OddOneOutSample, RetrievalSplit, Sample, TripletSample};
use crate::task::TaskKind;
use crate::IQA_REFERENCE_PROMPT;

/// A schema rule broken by a sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Modality pattern `(ref, candidates)` required by each triplet task.
pub fn triplet_pattern(task: TaskKind) -> Option<(MediaKind, MediaKind)> {
    use MediaKind::*;
    match task {
        TaskKind::Img2Afc => Some((Image, Image)),
        TaskKind::It2Afc => Some((Text, Image)),
        TaskKind::Text2Afc => Some((Image, Text)),
        TaskKind::Iqa | TaskKind::Paa(_) => Some((Text, Image)),
        TaskKind::Ooo | TaskKind::Retrieval => None,
    }
}

fn check_kind(out: &mut Vec<Violation>, field: &str, item: &MediaItem, want: MediaKind) {
    if item.kind() != want {
        out.push(Violation::new(field, format!("{field} must be {want}")));
    }
}

fn validate_triplet(s: &TripletSample) -> Vec<Violation> {
    let mut out = Vec::new();
    match triplet_pattern(s.task) {
        None => out.push(Violation::new(
            "task",
            format!("task {} is not a triplet task", s.task),
        )),
        Some((ref_kind, cand_kind)) => {
            check_kind(&mut out, "ref", &s.reference, ref_kind);
            check_kind(&mut out, "cand[0]", &s.cand[0], cand_kind);
            check_kind(&mut out, "cand[1]", &s.cand[1], cand_kind);
        }
    }
    if s.task == TaskKind::Iqa {
        if let Some(text) = s.reference.as_text() {
            if text != IQA_REFERENCE_PROMPT {
                out.push(Violation::new(
                    "ref",
                    format!("iqa ref must be \"{IQA_REFERENCE_PROMPT}\""),
                ));
            }
        }
    }
    if s.label > 1 {
        out.push(Violation::new(
            "label",
            format!("label must be 0 or 1, got {}", s.label),
        ));
    }
    if s.dataset.is_empty() {
        out.push(Violation::new("dataset", "dataset must be non-empty"));
    }
    out
}

fn validate_ooo(s: &OddOneOutSample) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, item) in s.items.iter().enumerate() {
        check_kind(&mut out, &format!("items[{i}]"), item, MediaKind::Image);
    }
    if s.odd > 2 {
        out.push(Violation::new(
            "odd",
            format!("odd must be 0, 1 or 2, got {}", s.odd),
        ));
    }
    if s.dataset.is_empty() {
        out.push(Violation::new("dataset", "dataset must be non-empty"));
    }
    out
}

fn validate_retrieval(s: &RetrievalSplit) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, q) in s.queries.iter().enumerate() {
        check_kind(&mut out, &format!("queries[{i}]"), q, MediaKind::Image);
    }
    for (i, g) in s.gallery.iter().enumerate() {
        check_kind(&mut out, &format!("gallery[{i}]"), g, MediaKind::Image);
    }
    if s.relevance.len() != s.queries.len() {
        out.push(Violation::new(
            "relevance",
            format!(
                "relevance has {} entries for {} queries",
                s.relevance.len(),
                s.queries.len()
            ),
        ));
    }
    for (q, rel) in s.relevance.iter().enumerate() {
        for d in Difficulty::ALL {
            let r = rel.at(d);
            let field = format!("relevance[{q}].{d:?}").to_lowercase();
            let pos: HashSet<_> = r.positives.iter().collect();
            if r.junk.iter().any(|j| pos.contains(j)) {
                out.push(Violation::new(&field, "positive and junk sets overlap"));
            }
            if let Some(bad) = r
                .positives
                .iter()
                .chain(&r.junk)
                .find(|&&i| i >= s.gallery.len())
            {
                out.push(Violation::new(
                    &field,
                    format!("gallery index {bad} out of range"),
                ));
            }
        }
    }
    out
}

/// Check modality pattern and label range. Violations are returned, never thrown.
pub fn validate_sample(sample: &Sample) -> Result<(), Vec<Violation>> {
    let violations = match sample {
        Sample::Triplet(s) => validate_triplet(s),
        Sample::OddOneOut(s) => validate_ooo(s),
        Sample::Retrieval(s) => validate_retrieval(s),
    };
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{QueryRelevance, Relevance};
    use crate::task::PerceptualAttribute;

    fn imgs() -> [MediaItem; 2] {
        [MediaItem::image("a.png"), MediaItem::image("b.png")]
    }

    fn messages(s: impl Into<Sample>) -> Vec<String> {
        match validate_sample(&s.into()) {
            Ok(()) => vec![],
            Err(v) => v.into_iter().map(|v| v.message).collect(),
        }
    }

    #[test]
    fn img2afc_with_text_ref_is_rejected() {
        let s = TripletSample::new(TaskKind::Img2Afc, "nights", MediaItem::text("x"), imgs(), 0);
        assert_eq!(messages(s), vec!["ref must be image"]);
    }

    #[test]
    fn iqa_with_quality_prompt_is_ok() {
        let s = TripletSample::new(
            TaskKind::Iqa,
            "kadid10k",
            MediaItem::text("A high quality photo."),
            imgs(),
            0,
        );
        assert!(messages(s).is_empty());
    }

    #[test]
    fn iqa_requires_the_fixed_reference_text() {
        let s = TripletSample::new(
            TaskKind::Iqa,
            "kadid10k",
            MediaItem::text("nice"),
            imgs(),
            0,
        );
        assert_eq!(messages(s).len(), 1);
    }

    #[test]
    fn label_out_of_range() {
        let s = TripletSample::new(TaskKind::Img2Afc, "bapps", MediaItem::image("r"), imgs(), 2);
        let m = messages(s);
        assert_eq!(m.len(), 1);
        assert!(m[0].contains("label"));
    }

    #[test]
    fn modality_patterns_per_task() {
        let text2afc = TripletSample::new(
            TaskKind::Text2Afc,
            "polaris",
            MediaItem::image("r"),
            [MediaItem::text("a"), MediaItem::text("b")],
            1,
        );
        assert!(messages(text2afc.clone()).is_empty());
        let mut broken = text2afc;
        broken.cand[1] = MediaItem::image("oops");
        assert_eq!(messages(broken), vec!["cand[1] must be text"]);

        let paa = TripletSample::new(
            TaskKind::Paa(PerceptualAttribute::Brightness),
            "sice",
            MediaItem::text("A bright photo."),
            imgs(),
            1,
        );
        assert!(messages(paa).is_empty());

        let wrong_task = TripletSample::new(TaskKind::Ooo, "x", MediaItem::image("r"), imgs(), 0);
        assert_eq!(messages(wrong_task).len(), 1);
    }

    #[test]
    fn ooo_rules() {
        let mut s = OddOneOutSample {
            dataset: "cifar100-ooo".into(),
            items: [
                MediaItem::image("0"),
                MediaItem::image("1"),
                MediaItem::image("2"),
            ],
            odd: 1,
            meta: Default::default(),
        };
        assert!(messages(s.clone()).is_empty());
        s.odd = 3;
        s.items[0] = MediaItem::text("t");
        assert_eq!(messages(s).len(), 2);
    }

    #[test]
    fn retrieval_rules() {
        let mut split = RetrievalSplit {
            dataset: "rparis".into(),
            queries: vec![MediaItem::image("q")],
            gallery: vec![MediaItem::image("g0"), MediaItem::image("g1")],
            relevance: vec![QueryRelevance {
                medium: Relevance {
                    positives: vec![0],
                    junk: vec![1],
                },
                hard: Relevance {
                    positives: vec![0],
                    junk: vec![],
                },
            }],
        };
        assert!(messages(split.clone()).is_empty());
        split.relevance[0].hard.junk = vec![0];
        split.relevance[0].medium.positives = vec![5];
        assert_eq!(messages(split).len(), 2);
    }
}

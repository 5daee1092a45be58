//! Instruction-tuning annotation files for generative models.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unisim_backends::{default_template, option_labels, render_prompt, PromptTemplate};
use unisim_core::{validate_sample, PerceptualAttribute, Sample, TaskFamily, TaskKind};

use crate::error::ForgeError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub images: Vec<String>,
    pub instruction: String,
    pub answer: String,
}

/// Instruction templates (any number per task) and answer formats.
/// Answer formats may use `{letter}` and `{label}`.
#[derive(Debug, Clone)]
pub struct InstructionTemplates {
    pub templates: Vec<PromptTemplate>,
    pub answers: Vec<String>,
}

const HEADERS: [&str; 2] = [
    "Please look at the images and answer the question below.",
    "Select the correct option for the following question.",
];

const ANSWERS: [&str; 3] = [
    "({letter})",
    "({letter}) {label}",
    "The answer is ({letter}).",
];

impl Default for InstructionTemplates {
    /// The inference instruction of every task plus variants with a
    /// different opening line.
    fn default() -> Self {
        let tasks = [
            TaskKind::Img2Afc,
            TaskKind::It2Afc,
            TaskKind::Text2Afc,
            TaskKind::Iqa,
            TaskKind::Paa(PerceptualAttribute::Brightness),
            TaskKind::Ooo,
        ];
        let mut templates = Vec::new();
        for task in tasks {
            let base = default_template(task).expect("every listed task has a template");
            let rest = base
                .body
                .split_once('\n')
                .map(|(_, r)| r.to_string())
                .unwrap_or_default();
            templates.push(base.clone());
            for h in HEADERS {
                templates.push(PromptTemplate {
                    body: format!("{h}\n{rest}"),
                    ..base.clone()
                });
            }
        }
        Self {
            templates,
            answers: ANSWERS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn answer_index(s: &Sample) -> Option<usize> {
    match s {
        Sample::Triplet(t) => Some(t.label as usize),
        Sample::OddOneOut(o) => Some(o.odd as usize),
        Sample::Retrieval(_) => None,
    }
}

/// One record per sample, with templates and answer formats rotated per
/// task, followed by the records of `extra` files; the whole set is shuffled
/// under `seed` and written as JSON lines. Returns the record count.
pub fn emit_instruction_annotations(
    samples: &[Sample],
    templates: &InstructionTemplates,
    out: &Path,
    extra: &[PathBuf],
    seed: u64,
) -> Result<usize, ForgeError> {
    let mut by_family: HashMap<TaskFamily, Vec<&PromptTemplate>> = HashMap::new();
    for t in &templates.templates {
        by_family.entry(t.task.family()).or_default().push(t);
    }
    let answers: Vec<&str> = if templates.answers.is_empty() {
        vec![ANSWERS[0]]
    } else {
        templates.answers.iter().map(String::as_str).collect()
    };

    let mut seen: HashMap<TaskFamily, usize> = HashMap::new();
    let mut records = Vec::with_capacity(samples.len());
    for (index, s) in samples.iter().enumerate() {
        validate_sample(s).map_err(|violations| ForgeError::Invalid {
            dataset: s.dataset().into(),
            index,
            violations,
        })?;
        let task = s.task();
        let family = task.family();
        let candidates = by_family
            .get(&family)
            .ok_or_else(|| ForgeError::TemplateMismatch(task.to_string()))?;
        let answer_at =
            answer_index(s).ok_or_else(|| ForgeError::TemplateMismatch(task.to_string()))?;
        let k = seen.entry(family).or_default();
        let template = candidates[*k % candidates.len()];
        let format = answers[(*k / candidates.len()) % answers.len()];
        *k += 1;

        let rendered = render_prompt(template, s)?;
        let letter = rendered.options.get(answer_at).cloned().unwrap_or_default();
        let label = option_labels(task)
            .get(answer_at)
            .copied()
            .unwrap_or_default();
        records.push(AnnotationRecord {
            images: rendered
                .images
                .iter()
                .map(|m| m.locator().to_string())
                .collect(),
            instruction: rendered.instruction,
            answer: format
                .replace("{letter}", &letter)
                .replace("{label}", label),
        });
    }

    for path in extra {
        let text = std::fs::read_to_string(path).map_err(ForgeError::io(path))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: AnnotationRecord =
                serde_json::from_str(line).map_err(|e| ForgeError::Annotation {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            records.push(r);
        }
    }

    records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let file = std::fs::File::create(out).map_err(ForgeError::io(out))?;
    let mut w = std::io::BufWriter::new(file);
    for r in &records {
        serde_json::to_writer(&mut w, r).expect("record serializes");
        w.write_all(b"\n").map_err(ForgeError::io(out))?;
    }
    w.flush().map_err(ForgeError::io(out))?;
    Ok(records.len())
}

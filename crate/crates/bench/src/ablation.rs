//! Training-subset ablations: train on several subsets of the datasets and
//! compare every variant on every dataset's test split.
//!
//! ```toml
//! out = "ablation"
//! dim = 16
//! teacher_shift = 2.0
//!
//! [train]
//! max_lr = 0.01
//! total_steps = 300
//!
//! [[datasets]]
//! name = "img-small"
//! reference = "image"
//! candidates = "image"
//! train = 40
//! test = 1000
//!
//! [[variants]]
//! name = "img only"
//! train_on = ["img-small"]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unisim_trainer::{
    fit, shifted_teacher, teacher_triplets, Modality, TaskData, ToyDualEncoder, ToyTriplet,
    TrainConfig,
};

use crate::error::BenchError;

pub const ABLATION_FILE: &str = "ablation.json";
pub const ABLATION_TABLE_FILE: &str = "ablation.md";

/// A synthetic dataset labelled by the shared teacher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyDatasetSpec {
    pub name: String,
    pub reference: Modality,
    pub candidates: Modality,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    pub train_on: Vec<String>,
}

fn default_dim() -> usize {
    16
}

fn default_shift() -> f64 {
    2.0
}

fn default_gap() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub model_seed: u64,
    /// Seed for the teacher and the synthetic samples.
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default = "default_shift")]
    pub teacher_shift: f64,
    #[serde(default = "default_gap")]
    pub min_gap: f64,
    #[serde(default)]
    pub train: TrainConfig,
    pub datasets: Vec<ToyDatasetSpec>,
    pub variants: Vec<Variant>,
}

impl AblationConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, BenchError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.out = cfg.out.map(|p| base.join(p));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.variants.is_empty() {
            return fail("no ablation variants".into());
        }
        if self.dim == 0 {
            return fail("dim must be positive".into());
        }
        let mut names = BTreeSet::new();
        for d in &self.datasets {
            if !names.insert(d.name.as_str()) {
                return fail(format!("duplicate dataset `{}`", d.name));
            }
            if d.train == 0 || d.test == 0 {
                return fail(format!("dataset `{}` needs train and test samples", d.name));
            }
        }
        for v in &self.variants {
            if v.train_on.is_empty() {
                return fail(format!("variant `{}` trains on nothing", v.name));
            }
            if let Some(u) = v.train_on.iter().find(|n| !names.contains(n.as_str())) {
                return fail(format!("variant `{}` names unknown dataset `{u}`", v.name));
            }
        }
        self.train.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub dataset: String,
    pub accuracy: f64,
    /// The variant did not train on this dataset.
    pub held_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub train_on: Vec<String>,
    pub cells: Vec<AblationCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub datasets: Vec<String>,
    /// Test accuracy of the untrained model, per dataset.
    pub baseline: Vec<f64>,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn cell(&self, variant: &str, dataset: &str) -> Option<&AblationCell> {
        self.rows
            .iter()
            .find(|r| r.variant == variant)?
            .cells
            .iter()
            .find(|c| c.dataset == dataset)
    }

    /// Markdown table; `*` marks datasets the variant trained on.
    pub fn to_markdown(&self) -> String {
        let mut s = format!(
            "| variant | {} |\n|---|{}\n",
            self.datasets.join(" | "),
            "---|".repeat(self.datasets.len())
        );
        let base: Vec<String> = self
            .baseline
            .iter()
            .map(|a| crate::aggregate::display_percent(*a))
            .collect();
        s.push_str(&format!("| (untrained) | {} |\n", base.join(" | ")));
        for r in &self.rows {
            let cells: Vec<String> = r
                .cells
                .iter()
                .map(|c| {
                    let v = crate::aggregate::display_percent(c.accuracy);
                    if c.held_out {
                        v
                    } else {
                        format!("{v}*")
                    }
                })
                .collect();
            s.push_str(&format!("| {} | {} |\n", r.variant, cells.join(" | ")));
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
        let json = dir.join(ABLATION_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("ablation report serializes");
        text.push('\n');
        std::fs::write(&json, text).map_err(BenchError::io(&json))?;
        let md = dir.join(ABLATION_TABLE_FILE);
        std::fs::write(&md, self.to_markdown()).map_err(BenchError::io(&md))
    }
}

struct ToySplit {
    train: Vec<ToyTriplet>,
    test: Vec<ToyTriplet>,
}

/// Trains one fresh model per variant and scores all test splits.
pub fn run_ablation(cfg: &AblationConfig) -> Result<AblationReport, BenchError> {
    cfg.validate()?;
    let base = ToyDualEncoder::new(cfg.dim, cfg.model_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data_seed);
    rng.set_stream(u64::MAX);
    let teacher = shifted_teacher(&base, cfg.teacher_shift, &mut rng);
    let splits: Vec<ToySplit> = cfg
        .datasets
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.data_seed);
            rng.set_stream(i as u64 + 1);
            let mut all = teacher_triplets(
                &teacher,
                d.reference,
                d.candidates,
                d.train + d.test,
                cfg.min_gap,
                &mut rng,
            );
            let test = all.split_off(d.train);
            ToySplit { train: all, test }
        })
        .collect();

    let baseline = splits
        .iter()
        .map(|s| base.accuracy(&s.test))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(cfg.variants.len());
    for v in &cfg.variants {
        let tasks: Vec<TaskData> = cfg
            .datasets
            .iter()
            .zip(&splits)
            .filter(|(d, _)| v.train_on.contains(&d.name))
            .map(|(d, s)| TaskData {
                name: d.name.clone(),
                samples: s.train.clone(),
            })
            .collect();
        let mut model = base.clone();
        fit(&mut model, &tasks, &cfg.train)?;
        let cells = cfg
            .datasets
            .iter()
            .zip(&splits)
            .map(|(d, s)| {
                Ok(AblationCell {
                    dataset: d.name.clone(),
                    accuracy: model.accuracy(&s.test)?,
                    held_out: !v.train_on.contains(&d.name),
                })
            })
            .collect::<Result<Vec<_>, BenchError>>()?;
        rows.push(AblationRow {
            variant: v.name.clone(),
            train_on: v.train_on.clone(),
            cells,
        });
    }
    Ok(AblationReport {
        datasets: cfg.datasets.iter().map(|d| d.name.clone()).collect(),
        baseline,
        rows,
    })
}

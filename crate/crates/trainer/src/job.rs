//! Config-driven training runs over ingested sample files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unisim_core::{read_jsonl, Sample};

use crate::checkpoint::{save_checkpoint, write_trace, CheckpointManifest};
use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::fit::{fit, FitReport, TaskData};
use crate::model::{ToyDualEncoder, ToyTriplet};

pub const TRACE_FILE: &str = "trace.csv";
pub const CHECKPOINT_DIR: &str = "checkpoint";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSource {
    pub name: String,
    /// Sample files (JSON lines); triplet samples only.
    pub datasets: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainJob {
    pub out: PathBuf,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub model_seed: u64,
    #[serde(default)]
    pub train: TrainConfig,
    pub tasks: Vec<TaskSource>,
}

fn default_dim() -> usize {
    16
}

impl TrainJob {
    /// Parses the job; relative paths resolve against the config's directory.
    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(TrainError::io(path))?;
        let mut job: Self = toml::from_str(&text).map_err(|e| TrainError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        job.out = base.join(&job.out);
        for t in &mut job.tasks {
            for d in &mut t.datasets {
                *d = base.join(&*d);
            }
        }
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.dim == 0 {
            return Err(TrainError::Config("dim must be positive".into()));
        }
        if self.tasks.is_empty() {
            return Err(TrainError::Config("no tasks".into()));
        }
        self.train.validate()
    }

    pub fn load_tasks(&self) -> Result<Vec<TaskData>, TrainError> {
        let mut tasks = Vec::with_capacity(self.tasks.len());
        for src in &self.tasks {
            let mut samples = Vec::new();
            for path in &src.datasets {
                for s in read_jsonl(path)? {
                    match s {
                        Sample::Triplet(t) => samples.push(ToyTriplet::from_sample(&t, self.dim)),
                        other => {
                            return Err(TrainError::Config(format!(
                                "{}: task `{}` takes triplet samples, found {}",
                                path.display(),
                                src.name,
                                other.task()
                            )))
                        }
                    }
                }
            }
            tasks.push(TaskData {
                name: src.name.clone(),
                samples,
            });
        }
        Ok(tasks)
    }
}

pub struct JobOutcome {
    pub report: FitReport,
    pub manifest: CheckpointManifest,
}

/// Trains the toy encoder and writes `<out>/trace.csv` and `<out>/checkpoint/`.
pub fn run_job(job: &TrainJob) -> Result<JobOutcome, TrainError> {
    let tasks = job.load_tasks()?;
    let mut model = ToyDualEncoder::new(job.dim, job.model_seed);
    let report = fit(&mut model, &tasks, &job.train)?;
    std::fs::create_dir_all(&job.out).map_err(TrainError::io(&job.out))?;
    write_trace(&job.out.join(TRACE_FILE), &report.trace)?;
    let manifest = save_checkpoint(
        &job.out.join(CHECKPOINT_DIR),
        &model,
        job.train.total_steps,
        report.optimizer.clone(),
    )?;
    Ok(JobOutcome { report, manifest })
}

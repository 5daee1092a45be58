//! Benchmark reports and their JSON, CSV and radar renderings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unisim_core::{TaskFamily, TaskKind, TiePolicy};

use crate::aggregate::display_percent;
use crate::error::BenchError;

pub const REPORT_FILE: &str = "report.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const RADAR_FILE: &str = "radar.json";

/// Written into every report next to retrieval scores.
pub const RETRIEVAL_METRIC_NOTE: &str = "retrieval columns hold mean average precision: per query, the gallery is \
ranked by cosine similarity, junk images are removed, and AP = (1/|P|) * sum over positives of precision at their \
rank; the reported value is the mean of the medium and hard protocol mAPs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub tie_policy: TiePolicy,
    pub iqa_mode_policy: String,
    pub config_hash: String,
    pub retrieval_metric: String,
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetResult {
    pub backend: String,
    pub dataset: String,
    pub task: TaskKind,
    /// `accuracy`, or `map` for retrieval.
    pub metric: String,
    pub accuracy: f64,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unparseable_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iqa_mode: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub detail: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSummary {
    pub backend: String,
    pub tasks: BTreeMap<TaskFamily, f64>,
    pub overall: f64,
}

/// The scoring mode picked for one (backend, task) on the held-out shard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeChoice {
    pub backend: String,
    pub task: TaskFamily,
    pub mode: String,
    pub shard_accuracy: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub backend: Option<String>,
    pub dataset: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub meta: RunMeta,
    pub results: Vec<DatasetResult>,
    pub summaries: Vec<BackendSummary>,
    pub mode_selection: Vec<ModeChoice>,
    /// Combinations that do not apply, e.g. retrieval with a generative backend.
    pub skipped: Vec<Note>,
    pub errors: Vec<Note>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Radar,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The report without wall-clock fields, for reproducibility checks.
    pub fn without_timestamps(&self) -> Self {
        let mut r = self.clone();
        r.meta.started_unix = 0;
        r.meta.finished_unix = 0;
        r
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "backend",
            "dataset",
            "task",
            "metric",
            "accuracy",
            "display",
            "count",
            "unparseable_rate",
            "iqa_mode",
        ])
        .expect("in-memory write");
        for r in &self.results {
            w.write_record([
                r.backend.clone(),
                r.dataset.clone(),
                r.task.to_string(),
                r.metric.clone(),
                r.accuracy.to_string(),
                display_percent(r.accuracy),
                r.count.to_string(),
                r.unparseable_rate
                    .map(|u| u.to_string())
                    .unwrap_or_default(),
                r.iqa_mode.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Backend -> task -> task mean, one radar axis per task.
    pub fn radar(&self) -> BTreeMap<String, BTreeMap<TaskFamily, f64>> {
        self.summaries
            .iter()
            .map(|s| (s.backend.clone(), s.tasks.clone()))
            .collect()
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Radar => {
                let mut s = serde_json::to_string_pretty(&self.radar()).expect("radar serializes");
                s.push('\n');
                s
            }
        }
    }

    pub fn write_artifacts(&self, dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
        for (file, format) in [
            (REPORT_FILE, ReportFormat::Json),
            (RESULTS_FILE, ReportFormat::Csv),
            (RADAR_FILE, ReportFormat::Radar),
        ] {
            let path = dir.join(file);
            std::fs::write(&path, self.render(format)).map_err(BenchError::io(&path))?;
        }
        Ok(())
    }

    pub fn read(run_dir: &Path) -> Result<Self, BenchError> {
        let path = run_dir.join(REPORT_FILE);
        let text = std::fs::read_to_string(&path).map_err(BenchError::io(&path))?;
        serde_json::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }
}

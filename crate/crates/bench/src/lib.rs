//! Benchmark runner for multi-task perceptual similarity: per-dataset
//! evaluation, table arithmetic, reports, training-subset ablations and the
//! `unisim` command line.

pub mod ablation;
pub mod aggregate;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod report;
pub mod run;

pub use ablation::{
    run_ablation, AblationCell, AblationConfig, AblationReport, AblationRow, ToyDatasetSpec,
    Variant,
};
pub use aggregate::{aggregate, display, display_percent, Summary};
pub use config::{Backend, BackendKind, BackendSpec, DatasetSpec, IqaModePolicy, RunConfig};
pub use error::BenchError;
pub use eval::{
    average_precision, eval_2afc, eval_nafc, eval_ooo, eval_retrieval, mean_average_precision,
    rank_by_similarity, Decision, NafcPoint, RetrievalScore, Tally,
};
pub use report::{
    BackendSummary, BenchmarkReport, DatasetResult, ModeChoice, Note, ReportFormat, RunMeta,
};
pub use run::{load_dataset, nafc_sweep, run_and_write, run_benchmark, LoadedDataset, RunFilter};

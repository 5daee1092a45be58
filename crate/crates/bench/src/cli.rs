//! The `unisim` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use unisim_forge::{ingest_dataset, load_ranked_groups, IngestOptions};
use unisim_trainer::{run_job, TrainJob};

use crate::ablation::{run_ablation, AblationConfig};
use crate::config::RunConfig;
use crate::error::BenchError;
use crate::report::{BenchmarkReport, ReportFormat};
use crate::run::{cache_for, nafc_sweep, run_and_write, RunFilter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

pub const NAFC_FILE: &str = "nafc.json";

#[derive(Debug, Parser)]
#[command(
    name = "unisim",
    version,
    about = "Multi-task perceptual similarity benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a raw dataset into sample JSON lines plus a manifest.
    Ingest {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Evaluate the configured backends on the configured datasets.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        backend: Option<String>,
        /// Task family (`iqa`) or kind (`paa:contrast`).
        #[arg(long)]
        task: Option<String>,
    },
    /// Fine-tune the toy encoder with low-rank adapters.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Accuracy as the number of alternatives grows.
    Nafc {
        /// Label for the instances; the raw layout is the ranked-prompt one.
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        raw: PathBuf,
        /// Run config providing the backends.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a stored run report.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// Train on several dataset subsets and compare them.
    Ablate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Exit code for a finished command.
pub fn exit_code(result: &Result<bool, BenchError>) -> i32 {
    match result {
        Ok(false) => EXIT_OK,
        Ok(true) => EXIT_PARTIAL,
        Err(e) if e.is_config() => EXIT_CONFIG,
        Err(_) => EXIT_FAILURE,
    }
}

/// Runs one command, writing human output to `out`. `Ok(true)` means some
/// parts failed.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<bool, BenchError> {
    let w = |out: &mut dyn Write, s: &str| {
        out.write_all(s.as_bytes())
            .map_err(BenchError::io(Path::new("<stdout>")))
    };
    match cli.command {
        Command::Ingest {
            dataset,
            raw,
            out: dir,
            seed,
            split,
            limit,
        } => {
            let opts = IngestOptions {
                seed,
                split,
                limit,
                ..Default::default()
            };
            let m = ingest_dataset(&dataset, &raw, &dir, &opts)?;
            w(out, &format!("{}: {} samples\n", m.dataset, m.count))?;
            Ok(false)
        }
        Command::Eval {
            config,
            backend,
            task,
        } => {
            let cfg = RunConfig::load(&config)?;
            let report = run_and_write(&cfg, &RunFilter { backend, task })?;
            for s in &report.summaries {
                w(
                    out,
                    &format!(
                        "{}: overall {}\n",
                        s.backend,
                        crate::aggregate::display_percent(s.overall)
                    ),
                )?;
            }
            for e in &report.errors {
                w(
                    out,
                    &format!(
                        "error {} / {}: {}\n",
                        e.backend.as_deref().unwrap_or("-"),
                        e.dataset,
                        e.message
                    ),
                )?;
            }
            Ok(!report.errors.is_empty())
        }
        Command::Train { config } => {
            let job = TrainJob::load(&config)?;
            let outcome = run_job(&job)?;
            let accs: Vec<String> = outcome
                .report
                .accuracy
                .iter()
                .map(|a| crate::aggregate::display_percent(*a))
                .collect();
            w(
                out,
                &format!(
                    "trained {} steps; task accuracy {}\n",
                    job.train.total_steps,
                    accs.join(", ")
                ),
            )?;
            Ok(false)
        }
        Command::Nafc {
            dataset,
            raw,
            config,
            backend,
            n_min,
            n_max,
            seed,
            out: dir,
        } => {
            let cfg = RunConfig::load(&config)?;
            let spec = match &backend {
                Some(b) => cfg
                    .backends
                    .iter()
                    .find(|s| &s.id == b)
                    .ok_or_else(|| BenchError::Config(format!("unknown backend `{b}`")))?,
                None => &cfg.backends[0],
            };
            let seed = seed.unwrap_or(cfg.seed);
            let groups = load_ranked_groups(
                &raw,
                &IngestOptions {
                    seed,
                    ..Default::default()
                },
            )?;
            let built = spec.build(cfg.media_root.as_deref())?;
            let points = nafc_sweep(
                &built,
                cache_for(&cfg),
                &groups,
                &dataset,
                n_min..=n_max,
                seed,
                cfg.tie_policy,
            )?;
            w(out, "n\taccuracy\tinstances\tskipped_groups\n")?;
            for p in &points {
                w(
                    out,
                    &format!(
                        "{}\t{:.4}\t{}\t{}\n",
                        p.n,
                        p.tally.accuracy(),
                        p.tally.total,
                        p.skipped_groups
                    ),
                )?;
            }
            if let Some(dir) = dir {
                std::fs::create_dir_all(&dir).map_err(BenchError::io(&dir))?;
                let path = dir.join(NAFC_FILE);
                let text = serde_json::to_string_pretty(&points).expect("points serialize");
                std::fs::write(&path, text + "\n").map_err(BenchError::io(&path))?;
            }
            Ok(false)
        }
        Command::Report { run, format } => {
            let report = BenchmarkReport::read(&run)?;
            w(out, &report.render(format))?;
            Ok(false)
        }
        Command::Ablate { config } => {
            let cfg = AblationConfig::load(&config)?;
            let report = run_ablation(&cfg)?;
            if let Some(dir) = &cfg.out {
                report.write(dir)?;
            }
            w(out, &report.to_markdown())?;
            Ok(false)
        }
    }
}

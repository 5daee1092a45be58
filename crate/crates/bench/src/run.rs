//! Benchmark runs: every (backend, dataset) pair of a config, concurrently.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use unisim_backends::{
    supports_prompt_pair, CachedEncoder, EmbeddingCache, GenerativeBackend, ScoringMode,
};
use unisim_core::{
    read_jsonl, ContentHash, Difficulty, Sample, TaskFamily, TaskKind, TiePolicy, TripletSample,
};
use unisim_forge::{Manifest, RankedGroup};

use crate::aggregate::aggregate;
use crate::config::{Backend, IqaModePolicy, RunConfig};
use crate::error::BenchError;
use crate::eval::{
    encoder_2afc, encoder_nafc, encoder_ooo, eval_2afc, eval_nafc, eval_ooo, eval_retrieval,
    generative_choice, NafcPoint, Tally,
};
use crate::report::{
    BackendSummary, BenchmarkReport, DatasetResult, ModeChoice, Note, RunMeta,
    RETRIEVAL_METRIC_NOTE,
};

/// Restricts a run to one backend and/or one task.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunFilter {
    pub backend: Option<String>,
    /// A task family (`iqa`) or a full task kind (`paa:brightness`).
    pub task: Option<String>,
}

impl RunFilter {
    fn check(&self, cfg: &RunConfig) -> Result<(), BenchError> {
        if let Some(b) = &self.backend {
            if !cfg.backends.iter().any(|s| &s.id == b) {
                return Err(BenchError::Config(format!("unknown backend `{b}`")));
            }
        }
        if let Some(t) = &self.task {
            let is_kind =
                serde_json::from_value::<TaskKind>(serde_json::Value::String(t.clone())).is_ok();
            if !is_kind && t.parse::<TaskFamily>().is_err() {
                return Err(BenchError::Config(format!("unknown task `{t}`")));
            }
        }
        Ok(())
    }

    fn keeps_task(&self, task: TaskKind) -> bool {
        self.task
            .as_ref()
            .is_none_or(|t| *t == task.to_string() || t == task.family().as_str())
    }
}

/// One ingested dataset, loaded and checked against its manifest.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub id: String,
    pub task: TaskKind,
    pub samples: Vec<Sample>,
}

/// Reads `path` and verifies that `<stem>.manifest.json` agrees on the count.
pub fn load_dataset(id: &str, path: &Path) -> Result<LoadedDataset, BenchError> {
    let manifest_path = path.with_extension("manifest.json");
    if !path.is_file() || !manifest_path.is_file() {
        return Err(BenchError::Config(format!(
            "dataset `{id}` is not ingested: expected {} and {}",
            path.display(),
            manifest_path.display()
        )));
    }
    let manifest = Manifest::read(&manifest_path)?;
    let samples = read_jsonl(path)?;
    if samples.len() != manifest.count {
        return Err(BenchError::Config(format!(
            "dataset `{id}`: {} holds {} samples, manifest says {}",
            path.display(),
            samples.len(),
            manifest.count
        )));
    }
    let task = match samples.first() {
        Some(s) => s.task(),
        None => return Err(BenchError::Config(format!("dataset `{id}` is empty"))),
    };
    if let Some(s) = samples.iter().find(|s| s.task() != task) {
        return Err(BenchError::Config(format!(
            "dataset `{id}` mixes tasks {task} and {}",
            s.task()
        )));
    }
    Ok(LoadedDataset {
        id: id.to_string(),
        task,
        samples,
    })
}

fn triplets(d: &LoadedDataset) -> Vec<TripletSample> {
    d.samples
        .iter()
        .filter_map(|s| s.as_triplet().cloned())
        .collect()
}

/// The held-out shard used for mode selection: a seeded subset of each dataset.
fn shard(d: &LoadedDataset, fraction: f64, seed: u64) -> Vec<TripletSample> {
    let all = triplets(d);
    let mut idx: Vec<usize> = (0..all.len()).collect();
    let h = ContentHash::of_text(&d.id);
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ u64::from_le_bytes(h.as_bytes()[..8].try_into().expect("8 bytes")),
    );
    idx.shuffle(&mut rng);
    let take = ((all.len() as f64 * fraction).ceil() as usize).clamp(1, all.len());
    idx[..take].iter().map(|&i| all[i].clone()).collect()
}

const SELECTABLE: [ScoringMode; 2] = [ScoringMode::Reference, ScoringMode::PromptPair { tau: 0.0 }];

fn with_tau(mode: ScoringMode, tau: f64) -> ScoringMode {
    match mode {
        ScoringMode::PromptPair { .. } => ScoringMode::PromptPair { tau },
        m => m,
    }
}

/// Picks the mode with the best mean shard accuracy over the family's
/// datasets; reference wins ties.
fn select_mode(
    enc: &CachedEncoder,
    family: TaskFamily,
    datasets: &[&LoadedDataset],
    cfg: &RunConfig,
) -> Result<ModeChoice, BenchError> {
    let mut shard_accuracy = BTreeMap::new();
    let mut best: Option<(ScoringMode, f64)> = None;
    for mode in SELECTABLE.map(|m| with_tau(m, cfg.tau)) {
        let mut accs = Vec::with_capacity(datasets.len());
        for d in datasets {
            let s = shard(d, cfg.holdout_fraction, cfg.seed);
            accs.push(eval_2afc(&s, |t| encoder_2afc(enc, t, mode, cfg.tie_policy))?.accuracy());
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        shard_accuracy.insert(mode.name().to_string(), mean);
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((mode, mean));
        }
    }
    let (mode, _) = best.expect("two candidate modes");
    Ok(ModeChoice {
        backend: enc.backend_id().to_string(),
        task: family,
        mode: mode.name().to_string(),
        shard_accuracy,
    })
}

fn result(
    backend: &str,
    d: &LoadedDataset,
    metric: &str,
    accuracy: f64,
    count: usize,
) -> DatasetResult {
    DatasetResult {
        backend: backend.to_string(),
        dataset: d.id.clone(),
        task: d.task,
        metric: metric.to_string(),
        accuracy,
        count,
        unparseable_rate: None,
        iqa_mode: None,
        detail: BTreeMap::new(),
    }
}

fn from_tally(backend: &str, d: &LoadedDataset, t: Tally) -> DatasetResult {
    result(backend, d, "accuracy", t.accuracy(), t.total)
}

fn eval_encoder(
    enc: &CachedEncoder,
    d: &LoadedDataset,
    mode: Option<ScoringMode>,
    tie: TiePolicy,
) -> Result<DatasetResult, BenchError> {
    let id = enc.backend_id();
    match d.task {
        TaskKind::Ooo => {
            let s: Vec<_> = d
                .samples
                .iter()
                .filter_map(|s| match s {
                    Sample::OddOneOut(o) => Some(o.clone()),
                    _ => None,
                })
                .collect();
            Ok(from_tally(id, d, eval_ooo(&s, |o| encoder_ooo(enc, o))?))
        }
        TaskKind::Retrieval => {
            let (mut medium, mut hard, mut queries) = (Vec::new(), Vec::new(), 0);
            for s in &d.samples {
                if let Sample::Retrieval(r) = s {
                    medium.push(eval_retrieval(r, enc, Difficulty::Medium)?.map);
                    hard.push(eval_retrieval(r, enc, Difficulty::Hard)?.map);
                    queries += r.queries.len();
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let (m, h) = (mean(&medium), mean(&hard));
            let mut r = result(id, d, "map", (m + h) / 2.0, d.samples.len());
            r.detail.insert("queries".into(), queries as f64);
            r.detail.insert("map_medium".into(), m);
            r.detail.insert("map_hard".into(), h);
            Ok(r)
        }
        _ => {
            let mode = mode.unwrap_or(ScoringMode::Reference);
            let tally = eval_2afc(&triplets(d), |t| encoder_2afc(enc, t, mode, tie))?;
            let mut r = from_tally(id, d, tally);
            if supports_prompt_pair(d.task) {
                r.iqa_mode = Some(mode.name().to_string());
            }
            Ok(r)
        }
    }
}

fn eval_generative(
    backend: &dyn GenerativeBackend,
    d: &LoadedDataset,
) -> Result<DatasetResult, BenchError> {
    let tally = match d.task {
        TaskKind::Ooo => {
            let s: Vec<_> = d
                .samples
                .iter()
                .filter_map(|s| match s {
                    Sample::OddOneOut(o) => Some(o.clone()),
                    _ => None,
                })
                .collect();
            eval_ooo(&s, |o| {
                generative_choice(backend, &Sample::OddOneOut(o.clone()))
            })?
        }
        _ => eval_2afc(&triplets(d), |t| {
            generative_choice(backend, &Sample::Triplet(t.clone()))
        })?,
    };
    let mut r = from_tally(backend.backend_id(), d, tally);
    r.unparseable_rate = Some(tally.unparseable_rate());
    Ok(r)
}

enum Outcome {
    Done(DatasetResult),
    Skipped(Note),
    Failed(Note),
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// The embedding cache a config asks for.
pub fn cache_for(cfg: &RunConfig) -> Arc<EmbeddingCache> {
    let cache = match &cfg.cache_dir {
        Some(dir) => EmbeddingCache::new(dir),
        None => EmbeddingCache::in_memory(),
    };
    Arc::new(match &cfg.media_root {
        Some(root) => cache.with_media_root(root),
        None => cache,
    })
}

/// Runs the configured suite. Configuration problems fail before any
/// evaluation; failures of single datasets land in `errors`.
pub fn run_benchmark(cfg: &RunConfig, filter: &RunFilter) -> Result<BenchmarkReport, BenchError> {
    let started_unix = unix_now();
    filter.check(cfg)?;
    if cfg.datasets.is_empty() {
        return Err(BenchError::Config("no datasets".into()));
    }
    let datasets = cfg
        .datasets
        .iter()
        .map(|d| load_dataset(&d.id, &d.path))
        .collect::<Result<Vec<_>, _>>()?;
    let datasets: Vec<LoadedDataset> = datasets
        .into_iter()
        .filter(|d| filter.keeps_task(d.task))
        .collect();
    let mut backends = Vec::new();
    for spec in &cfg.backends {
        if filter.backend.as_ref().is_none_or(|b| *b == spec.id) {
            backends.push((spec.id.clone(), spec.build(cfg.media_root.as_deref())?));
        }
    }
    let cache = cache_for(cfg);

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?
    };

    let encoders: Vec<(usize, CachedEncoder)> = backends
        .iter()
        .enumerate()
        .filter_map(|(i, (_, b))| match b {
            Backend::Encoder(e) => Some((i, CachedEncoder::new(e.clone(), cache.clone()))),
            Backend::Generative(_) => None,
        })
        .collect();
    let encoder_of = |i: usize| encoders.iter().find(|(j, _)| *j == i).map(|(_, e)| e);

    // IQA/PAA mode per (encoder, family)
    let mut selection_jobs = Vec::new();
    for (bi, _) in &encoders {
        for family in [TaskFamily::Iqa, TaskFamily::Paa] {
            let members: Vec<&LoadedDataset> = datasets
                .iter()
                .filter(|d| d.task.family() == family)
                .collect();
            if !members.is_empty() {
                selection_jobs.push((*bi, family, members));
            }
        }
    }
    let selections: Vec<((usize, TaskFamily), Result<ModeChoice, String>)> = pool.install(|| {
        selection_jobs
            .par_iter()
            .map(|(bi, family, members)| {
                let enc = encoder_of(*bi).expect("encoder index");
                let choice = match cfg.iqa_mode {
                    IqaModePolicy::Select => {
                        select_mode(enc, *family, members, cfg).map_err(|e| e.to_string())
                    }
                    fixed => Ok(ModeChoice {
                        backend: enc.backend_id().to_string(),
                        task: *family,
                        mode: fixed.name().to_string(),
                        shard_accuracy: BTreeMap::new(),
                    }),
                };
                ((*bi, *family), choice)
            })
            .collect()
    });
    let selected: BTreeMap<(usize, TaskFamily), &Result<ModeChoice, String>> =
        selections.iter().map(|(k, v)| (*k, v)).collect();

    let jobs: Vec<(usize, usize)> = (0..backends.len())
        .flat_map(|bi| (0..datasets.len()).map(move |di| (bi, di)))
        .collect();
    let outcomes: Vec<Outcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(bi, di)| {
                let (id, backend) = &backends[bi];
                let d = &datasets[di];
                let note = |message: String| Note {
                    backend: Some(id.clone()),
                    dataset: d.id.clone(),
                    message,
                };
                let res = match backend {
                    Backend::Encoder(_) => {
                        let enc = encoder_of(bi).expect("encoder index");
                        let mode = match selected.get(&(bi, d.task.family())) {
                            Some(Err(e)) => {
                                return Outcome::Failed(note(format!("mode selection: {e}")))
                            }
                            Some(Ok(c)) => Some(if c.mode == "prompt_pair" {
                                ScoringMode::PromptPair { tau: cfg.tau }
                            } else {
                                ScoringMode::Reference
                            }),
                            None => None,
                        };
                        eval_encoder(enc, d, mode, cfg.tie_policy)
                    }
                    Backend::Generative(g) => {
                        if d.task == TaskKind::Retrieval {
                            return Outcome::Skipped(note(
                                "retrieval needs an encoder backend".into(),
                            ));
                        }
                        eval_generative(g.as_ref(), d)
                    }
                };
                match res {
                    Ok(r) => Outcome::Done(r),
                    Err(e) => Outcome::Failed(note(e.to_string())),
                }
            })
            .collect()
    });

    let mut report = BenchmarkReport {
        meta: RunMeta {
            seed: cfg.seed,
            tie_policy: cfg.tie_policy,
            iqa_mode_policy: cfg.iqa_mode.name().to_string(),
            config_hash: cfg.config_hash.clone(),
            retrieval_metric: RETRIEVAL_METRIC_NOTE.to_string(),
            started_unix,
            finished_unix: 0,
        },
        results: Vec::new(),
        summaries: Vec::new(),
        mode_selection: selections.into_iter().filter_map(|(_, c)| c.ok()).collect(),
        skipped: Vec::new(),
        errors: Vec::new(),
    };
    for o in outcomes {
        match o {
            Outcome::Done(r) => report.results.push(r),
            Outcome::Skipped(n) => report.skipped.push(n),
            Outcome::Failed(n) => report.errors.push(n),
        }
    }
    for (id, _) in &backends {
        let rows: Vec<(TaskFamily, f64)> = report
            .results
            .iter()
            .filter(|r| &r.backend == id)
            .map(|r| (r.task.family(), r.accuracy))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let s = aggregate(&rows)?;
        report.summaries.push(BackendSummary {
            backend: id.clone(),
            tasks: s.tasks,
            overall: s.overall,
        });
    }
    report.meta.finished_unix = unix_now();
    Ok(report)
}

/// [`run_benchmark`] plus the report, CSV and radar files in `cfg.out`.
pub fn run_and_write(cfg: &RunConfig, filter: &RunFilter) -> Result<BenchmarkReport, BenchError> {
    let report = run_benchmark(cfg, filter)?;
    report.write_artifacts(&cfg.out)?;
    Ok(report)
}

/// Accuracy per number of alternatives for an encoder backend.
pub fn nafc_sweep(
    backend: &Backend,
    cache: Arc<EmbeddingCache>,
    groups: &[RankedGroup],
    dataset: &str,
    n_range: std::ops::RangeInclusive<usize>,
    seed: u64,
    tie: TiePolicy,
) -> Result<Vec<NafcPoint>, BenchError> {
    let Backend::Encoder(e) = backend else {
        return Err(BenchError::Config(
            "the alternative-count sweep needs an encoder backend".into(),
        ));
    };
    let enc = CachedEncoder::new(e.clone(), cache);
    eval_nafc(groups, dataset, n_range, seed, |inst| {
        encoder_nafc(&enc, inst, tie)
    })
}

//! Evaluation run configuration (TOML).
//!
//! ```toml
//! out = "runs/clip"
//! seed = 0
//! tie_policy = "prefer_first"      # or "error"
//! iqa_mode = "select"              # "reference", "prompt_pair" or "select"
//! tau = 100.0
//! holdout_fraction = 0.1
//! cache_dir = "cache"
//!
//! [[backends]]
//! id = "clip-b32"
//! kind = "command_encoder"         # command_generative, hash_encoder, random_generative
//! dim = 512
//! program = "python3"
//! args = ["encode.py"]
//!
//! [[datasets]]
//! id = "nights"
//! path = "data/nights.jsonl"
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unisim_backends::mock::{HashEncoder, RandomGenerative};
use unisim_backends::process::{CommandEncoder, CommandGenerative};
use unisim_backends::{EncoderBackend, GenerativeBackend};
use unisim_core::{ContentHash, TiePolicy};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IqaModePolicy {
    Reference,
    PromptPair,
    /// Pick per (backend, task) on a held-out shard.
    #[default]
    Select,
}

impl IqaModePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            IqaModePolicy::Reference => "reference",
            IqaModePolicy::PromptPair => "prompt_pair",
            IqaModePolicy::Select => "select",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    CommandEncoder,
    CommandGenerative,
    /// Deterministic pseudo-random embeddings, for wiring checks.
    HashEncoder,
    /// Pseudo-random option letters, for wiring checks.
    RandomGenerative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    pub id: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub program: Option<String>,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub inline_images: bool,
}

#[derive(Clone)]
pub enum Backend {
    Encoder(Arc<dyn EncoderBackend>),
    Generative(Arc<dyn GenerativeBackend>),
}

impl BackendSpec {
    fn need<T: Clone>(&self, v: &Option<T>, field: &str) -> Result<T, BenchError> {
        v.clone()
            .ok_or_else(|| BenchError::Config(format!("backend `{}` needs `{field}`", self.id)))
    }

    pub fn build(&self, media_root: Option<&Path>) -> Result<Backend, BenchError> {
        Ok(match self.kind {
            BackendKind::CommandEncoder => {
                let dim = self.need(&self.dim, "dim")?;
                if dim == 0 {
                    return Err(BenchError::Config(format!(
                        "backend `{}` has dim 0",
                        self.id
                    )));
                }
                Backend::Encoder(Arc::new(CommandEncoder {
                    id: self.id.clone(),
                    dim,
                    program: self.need(&self.program, "program")?,
                    args: self.args.clone(),
                }))
            }
            BackendKind::CommandGenerative => Backend::Generative(Arc::new(CommandGenerative {
                id: self.id.clone(),
                program: self.need(&self.program, "program")?,
                args: self.args.clone(),
                inline_images: self.inline_images,
                media_root: media_root.map(Path::to_path_buf),
            })),
            BackendKind::HashEncoder => Backend::Encoder(Arc::new(HashEncoder::new(
                self.id.clone(),
                self.dim.unwrap_or(32),
            ))),
            BackendKind::RandomGenerative => {
                Backend::Generative(Arc::new(RandomGenerative::new(self.id.clone())))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub id: String,
    /// Ingested samples, one JSON object per line.
    pub path: PathBuf,
}

fn default_tau() -> f64 {
    unisim_backends::scoring::DEFAULT_TAU
}

fn default_holdout() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tie_policy: TiePolicy,
    #[serde(default)]
    pub iqa_mode: IqaModePolicy,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Fraction of each IQA/PAA dataset used to pick the scoring mode.
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Root for relative image locators.
    #[serde(default)]
    pub media_root: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    pub backends: Vec<BackendSpec>,
    #[serde(default)]
    pub datasets: Vec<DatasetSpec>,
    /// SHA-256 of the config text; filled in by [`RunConfig::from_toml`].
    #[serde(skip)]
    pub config_hash: String,
}

impl RunConfig {
    /// Parses `text`; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, BenchError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.config_hash = ContentHash::of_bytes(text.as_bytes()).to_hex();
        cfg.out = base.join(&cfg.out);
        cfg.cache_dir = cfg.cache_dir.map(|p| base.join(p));
        cfg.media_root = cfg.media_root.map(|p| base.join(p));
        for d in &mut cfg.datasets {
            d.path = base.join(&d.path);
        }
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
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return fail(format!(
                "holdout_fraction must lie in (0, 1), got {}",
                self.holdout_fraction
            ));
        }
        if self.backends.is_empty() {
            return fail("no backends".into());
        }
        let mut ids = BTreeSet::new();
        for b in &self.backends {
            if !ids.insert(b.id.as_str()) {
                return fail(format!("duplicate backend id `{}`", b.id));
            }
        }
        let mut ids = BTreeSet::new();
        for d in &self.datasets {
            if !ids.insert(d.id.as_str()) {
                return fail(format!("duplicate dataset id `{}`", d.id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
out = "run"
[[backends]]
id = "h"
kind = "hash_encoder"
[[datasets]]
id = "nights"
path = "nights.jsonl"
"#;

    #[test]
    fn defaults_and_path_resolution() {
        let cfg = RunConfig::from_toml(MINIMAL, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.tie_policy, TiePolicy::PreferFirst);
        assert_eq!(cfg.iqa_mode, IqaModePolicy::Select);
        assert_eq!((cfg.tau, cfg.holdout_fraction), (100.0, 0.1));
        assert_eq!(cfg.datasets[0].path, Path::new("/cfg/nights.jsonl"));
        assert_eq!(cfg.config_hash.len(), 64);
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            MINIMAL.replace("out = \"run\"", "out = \"run\"\ntau = 0.0"),
            MINIMAL.replace("kind = \"hash_encoder\"", "kind = \"clip\""),
            MINIMAL.replace("out = \"run\"", "out = \"run\"\nbogus = 1"),
            format!("{MINIMAL}[[backends]]\nid = \"h\"\nkind = \"hash_encoder\"\n"),
        ] {
            assert!(RunConfig::from_toml(&bad, Path::new("/")).is_err(), "{bad}");
        }
        let cfg = RunConfig::from_toml(
            &MINIMAL.replace("hash_encoder", "command_encoder"),
            Path::new("/"),
        )
        .unwrap();
        assert!(cfg.backends[0].build(None).is_err());
    }
}

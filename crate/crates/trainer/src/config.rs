//! Training hyperparameters, loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::TrainError;
use crate::lora::LoraConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub margin: f64,
    pub batch_size: usize,
    pub max_lr: f64,
    pub weight_decay: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
    pub per_task_cap: usize,
    pub seed: u64,
    pub frozen_text_encoder: bool,
    /// Steps between training-accuracy evaluations; 0 disables them.
    pub eval_every: usize,
    pub lora: LoraConfig,
    pub optimizer: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 0.05,
            batch_size: 32,
            max_lr: 5e-6,
            weight_decay: 0.35,
            warmup_steps: 500,
            total_steps: 12_500,
            per_task_cap: 400_000,
            seed: 0,
            frozen_text_encoder: true,
            eval_every: 0,
            lora: LoraConfig::default(),
            optimizer: AdamWConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self, TrainError> {
        let cfg: Self = toml::from_str(text).map_err(|e| TrainError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(TrainError::io(path))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.into()));
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return fail("margin must be a finite non-negative number");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if !(self.max_lr >= 0.0 && self.max_lr.is_finite()) {
            return fail("max_lr must be a finite non-negative number");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail("weight_decay must be a finite non-negative number");
        }
        if self.warmup_steps > self.total_steps {
            return fail("warmup_steps exceeds total_steps");
        }
        if self.per_task_cap == 0 {
            return fail("per_task_cap must be positive");
        }
        let o = &self.optimizer;
        if !((0.0..1.0).contains(&o.beta1) && (0.0..1.0).contains(&o.beta2) && o.eps > 0.0) {
            return fail("optimizer betas must lie in [0, 1) and eps must be positive");
        }
        self.lora.validate()
    }
}

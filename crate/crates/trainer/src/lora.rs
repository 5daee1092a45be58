//! Low-rank adapters on frozen linear maps.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::TrainError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoraConfig {
    pub rank: usize,
    pub alpha: f64,
    pub dropout: f64,
    /// Linear maps that receive an adapter.
    pub targets: Vec<String>,
}

impl Default for LoraConfig {
    fn default() -> Self {
        Self {
            rank: 16,
            alpha: 32.0,
            dropout: 0.2,
            targets: vec![crate::model::IMAGE_MAP.to_string()],
        }
    }
}

impl LoraConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.rank == 0 {
            return Err(TrainError::Config("lora.rank must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(TrainError::Config("lora.alpha must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TrainError::Config("lora.dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Delta `(alpha / rank) * B * A` for one linear map; `A` is `rank x d_in`,
/// `B` is `d_out x rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    pub target: String,
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub alpha: f64,
    pub dropout: f64,
}

impl LoraAdapter {
    /// `A` uniform in `±1/sqrt(d_in)`, `B` zero.
    pub fn new(
        target: impl Into<String>,
        d_in: usize,
        d_out: usize,
        cfg: &LoraConfig,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = 1.0 / (d_in as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        Self {
            target: target.into(),
            a: Array2::from_shape_fn((cfg.rank, d_in), |_| dist.sample(rng)),
            b: Array2::zeros((d_out, cfg.rank)),
            alpha: cfg.alpha,
            dropout: cfg.dropout,
        }
    }

    pub fn rank(&self) -> usize {
        self.a.nrows()
    }

    pub fn d_in(&self) -> usize {
        self.a.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.b.nrows()
    }

    pub fn scale(&self) -> f64 {
        self.alpha / self.rank() as f64
    }

    pub fn delta(&self) -> Array2<f64> {
        self.b.dot(&self.a) * self.scale()
    }

    fn check(&self, w: ArrayView2<f64>) -> Result<(), TrainError> {
        if self.b.ncols() != self.rank() {
            return Err(TrainError::shape(
                "adapter B",
                format!("{} columns", self.rank()),
                self.b.ncols(),
            ));
        }
        if w.dim() != (self.d_out(), self.d_in()) {
            return Err(TrainError::shape(
                "base weight",
                format!("{:?}", (self.d_out(), self.d_in())),
                format!("{:?}", w.dim()),
            ));
        }
        Ok(())
    }
}

/// Inverted dropout: each entry kept with probability `1 - p` and rescaled.
pub fn dropout(x: ArrayView1<f64>, p: f64, rng: &mut impl Rng) -> Array1<f64> {
    if p == 0.0 {
        return x.to_owned();
    }
    let keep = 1.0 - p;
    x.mapv(|v| {
        if rng.gen::<f64>() < keep {
            v / keep
        } else {
            0.0
        }
    })
}

/// `W x + (alpha/r) B (A drop(x))`, dropout only when `rng` is given.
pub fn lora_forward<R: Rng>(
    w: ArrayView2<f64>,
    adapter: &LoraAdapter,
    x: ArrayView1<f64>,
    rng: Option<&mut R>,
) -> Result<Array1<f64>, TrainError> {
    adapter.check(w)?;
    if x.len() != adapter.d_in() {
        return Err(TrainError::shape("input", adapter.d_in(), x.len()));
    }
    let dropped = match rng {
        Some(rng) => dropout(x, adapter.dropout, rng),
        None => x.to_owned(),
    };
    let low = adapter.a.dot(&dropped);
    Ok(w.dot(&x) + adapter.b.dot(&low) * adapter.scale())
}

/// `W + (alpha/r) B A`.
pub fn merge(w: ArrayView2<f64>, adapter: &LoraAdapter) -> Result<Array2<f64>, TrainError> {
    adapter.check(w)?;
    Ok(&w + &adapter.delta())
}

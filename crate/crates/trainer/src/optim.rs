use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::AdamWConfig;
use crate::model::{AdapterGrads, ToyDualEncoder};

/// Adam with decoupled weight decay, applied to adapter matrices only.
#[derive(Debug, Clone)]
pub struct AdamW {
    cfg: AdamWConfig,
    weight_decay: f64,
    t: i32,
    moments: BTreeMap<String, [Array2<f64>; 4]>,
}

/// Optimizer settings as stored in a checkpoint manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRecord {
    pub name: String,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub decay_applies_to: String,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig, weight_decay: f64) -> Self {
        Self {
            cfg,
            weight_decay,
            t: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn record(&self) -> OptimizerRecord {
        OptimizerRecord {
            name: "adamw".into(),
            beta1: self.cfg.beta1,
            beta2: self.cfg.beta2,
            eps: self.cfg.eps,
            weight_decay: self.weight_decay,
            decay_applies_to: "adapters".into(),
        }
    }

    pub fn step(&mut self, model: &mut ToyDualEncoder, grads: &AdapterGrads, lr: f64) {
        self.t += 1;
        let AdamWConfig { beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        let decay = 1.0 - lr * self.weight_decay;
        for (target, (ga, gb)) in grads {
            let map = model
                .map_mut(target)
                .expect("gradients come from this model");
            let ad = map
                .adapter
                .as_mut()
                .expect("gradients come from an adapter");
            let m = self.moments.entry(target.clone()).or_insert_with(|| {
                [
                    Array2::zeros(ga.dim()),
                    Array2::zeros(ga.dim()),
                    Array2::zeros(gb.dim()),
                    Array2::zeros(gb.dim()),
                ]
            });
            let [ma, va, mb, vb] = m;
            for (p, g, m, v) in [(&mut ad.a, ga, ma, va), (&mut ad.b, gb, mb, vb)] {
                ndarray::Zip::from(p)
                    .and(g)
                    .and(m)
                    .and(v)
                    .for_each(|p, &g, m, v| {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *p = *p * decay - lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    });
            }
        }
    }
}

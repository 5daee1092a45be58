//! The training loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::model::{AdapterGrads, ToyDualEncoder, ToyTriplet};
use crate::optim::{AdamW, OptimizerRecord};
use crate::sampler::BalancedSampler;
use crate::schedule::lr_at;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub name: String,
    pub samples: Vec<ToyTriplet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
    pub eval_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub trace: Vec<TraceRow>,
    pub batch_counts: Vec<usize>,
    /// Final eval-mode 2AFC accuracy on each task's samples.
    pub accuracy: Vec<f64>,
    pub optimizer: OptimizerRecord,
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn add_into(total: &mut AdapterGrads, part: AdapterGrads) {
    for (k, (a, b)) in part {
        match total.get_mut(&k) {
            Some((ta, tb)) => {
                *ta += &a;
                *tb += &b;
            }
            None => {
                total.insert(k, (a, b));
            }
        }
    }
}

/// Trains the adapters of `model` on one batch per task per step.
/// Adapters are attached first if the model has none.
pub fn fit(
    model: &mut ToyDualEncoder,
    tasks: &[TaskData],
    cfg: &TrainConfig,
) -> Result<FitReport, TrainError> {
    cfg.validate()?;
    if model.adapters().next().is_none() {
        model.attach(
            &cfg.lora,
            cfg.frozen_text_encoder,
            &mut rng_stream(cfg.seed, 2),
        )?;
    }
    let sizes: Vec<usize> = tasks.iter().map(|t| t.samples.len()).collect();
    let mut sampler = BalancedSampler::new(&sizes, cfg.batch_size, cfg.per_task_cap, cfg.seed)?;
    let mut drop_rng = rng_stream(cfg.seed, 1);
    let mut opt = AdamW::new(cfg.optimizer, cfg.weight_decay);
    let mut trace = Vec::with_capacity(cfg.total_steps);

    for step in 0..cfg.total_steps {
        let lr = lr_at(step, cfg)?;
        let mut loss = 0.0;
        let mut grads = AdapterGrads::new();
        for batch in sampler.next_round() {
            let samples: Vec<&ToyTriplet> = batch
                .indices
                .iter()
                .map(|&i| &tasks[batch.task].samples[i])
                .collect();
            let (l, g) = model.loss_and_grad(&samples, cfg.margin, Some(&mut drop_rng))?;
            loss += l;
            add_into(&mut grads, g);
        }
        let finite = loss.is_finite()
            && grads
                .values()
                .all(|(a, b)| a.iter().chain(b).all(|v| v.is_finite()));
        if !finite {
            return Err(TrainError::NonFiniteLoss { step });
        }
        opt.step(model, &grads, lr);
        let eval_acc = if cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0 {
            Some(mean_accuracy(model, tasks)?)
        } else {
            None
        };
        trace.push(TraceRow {
            step,
            loss,
            lr,
            eval_acc,
        });
    }

    let accuracy = tasks
        .iter()
        .map(|t| model.accuracy(&t.samples))
        .collect::<Result<_, _>>()?;
    Ok(FitReport {
        trace,
        batch_counts: sampler.batch_counts().to_vec(),
        accuracy,
        optimizer: opt.record(),
    })
}

fn mean_accuracy(model: &ToyDualEncoder, tasks: &[TaskData]) -> Result<f64, TrainError> {
    let mut sum = 0.0;
    for t in tasks {
        sum += model.accuracy(&t.samples)?;
    }
    Ok(sum / tasks.len() as f64)
}

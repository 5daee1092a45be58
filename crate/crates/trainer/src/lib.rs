//! Multi-task hinge-loss fine-tuning with low-rank adapters.
//!
//! [`fit`] trains the adapters of a [`ToyDualEncoder`] on one batch per task
//! per step, drawn by a [`BalancedSampler`], with AdamW under a warmup plus
//! cosine schedule ([`lr_at`]).

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod fit;
pub mod job;
pub mod lora;
pub mod loss;
pub mod model;
pub mod optim;
pub mod sampler;
pub mod schedule;
pub mod synthetic;

pub use checkpoint::{
    load_checkpoint, read_trace, save_checkpoint, write_trace, CheckpointManifest,
};
pub use config::{AdamWConfig, TrainConfig};
pub use error::TrainError;
pub use fit::{fit, FitReport, TaskData, TraceRow};
pub use job::{run_job, TaskSource, TrainJob};
pub use lora::{lora_forward, merge, LoraAdapter, LoraConfig};
pub use loss::{hinge_grad, hinge_loss, multi_task_loss};
pub use model::{Modality, ToyDualEncoder, ToyInput, ToyTriplet, IMAGE_MAP, TEXT_MAP};
pub use optim::{AdamW, OptimizerRecord};
pub use sampler::{BalancedSampler, TaskBatch};
pub use schedule::lr_at;
pub use synthetic::{shifted_teacher, teacher_triplets};

//! Adapter checkpoints and training traces on disk.
//!
//! A checkpoint directory holds `manifest.json` and, per adapter target,
//! `<target>.a.emb` and `<target>.b.emb`: row-major matrices in the
//! embedding-cache container (f32 values).

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use unisim_backends::cache::{decode_emb, encode_emb};

use crate::error::TrainError;
use crate::fit::TraceRow;
use crate::lora::LoraAdapter;
use crate::model::ToyDualEncoder;
use crate::optim::OptimizerRecord;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterEntry {
    pub target: String,
    pub d_in: usize,
    pub d_out: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub targets: Vec<AdapterEntry>,
    pub rank: usize,
    pub alpha: f64,
    pub dropout: f64,
    pub step: usize,
    pub optimizer: OptimizerRecord,
}

fn matrix_file(dir: &Path, target: &str, which: &str) -> std::path::PathBuf {
    dir.join(format!("{target}.{which}.emb"))
}

fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<(), TrainError> {
    let values: Vec<f32> = m.iter().map(|&v| v as f32).collect();
    std::fs::write(path, encode_emb(&values)).map_err(TrainError::io(path))
}

fn read_matrix(path: &Path, shape: (usize, usize)) -> Result<Array2<f64>, TrainError> {
    let bytes = std::fs::read(path).map_err(TrainError::io(path))?;
    let values = decode_emb(&bytes).map_err(|source| TrainError::Emb {
        path: path.into(),
        source,
    })?;
    let n = values.len();
    Array2::from_shape_vec(shape, values.into_iter().map(f64::from).collect())
        .map_err(|_| TrainError::shape("checkpoint matrix", shape.0 * shape.1, n))
}

pub fn save_checkpoint(
    dir: &Path,
    model: &ToyDualEncoder,
    step: usize,
    optimizer: OptimizerRecord,
) -> Result<CheckpointManifest, TrainError> {
    std::fs::create_dir_all(dir).map_err(TrainError::io(dir))?;
    let adapters: Vec<&LoraAdapter> = model.adapters().collect();
    let first = adapters
        .first()
        .ok_or_else(|| TrainError::Config("model has no adapters".into()))?;
    let manifest = CheckpointManifest {
        targets: adapters
            .iter()
            .map(|a| AdapterEntry {
                target: a.target.clone(),
                d_in: a.d_in(),
                d_out: a.d_out(),
            })
            .collect(),
        rank: first.rank(),
        alpha: first.alpha,
        dropout: first.dropout,
        step,
        optimizer,
    };
    for a in &adapters {
        write_matrix(&matrix_file(dir, &a.target, "a"), &a.a)?;
        write_matrix(&matrix_file(dir, &a.target, "b"), &a.b)?;
    }
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(TrainError::io(&path))?;
    Ok(manifest)
}

pub fn load_checkpoint(dir: &Path) -> Result<(CheckpointManifest, Vec<LoraAdapter>), TrainError> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(TrainError::io(&path))?;
    let manifest: CheckpointManifest =
        serde_json::from_str(&text).map_err(|e| TrainError::Parse {
            path: path.clone(),
            message: e.to_string(),
        })?;
    let mut adapters = Vec::with_capacity(manifest.targets.len());
    for t in &manifest.targets {
        adapters.push(LoraAdapter {
            target: t.target.clone(),
            a: read_matrix(&matrix_file(dir, &t.target, "a"), (manifest.rank, t.d_in))?,
            b: read_matrix(&matrix_file(dir, &t.target, "b"), (t.d_out, manifest.rank))?,
            alpha: manifest.alpha,
            dropout: manifest.dropout,
        });
    }
    Ok((manifest, adapters))
}

impl ToyDualEncoder {
    /// Installs loaded adapters on their target maps.
    pub fn install(&mut self, adapters: Vec<LoraAdapter>) -> Result<(), TrainError> {
        for a in adapters {
            let map = self.map_mut(&a.target)?;
            if map.weight.dim() != (a.d_out(), a.d_in()) {
                return Err(TrainError::shape(
                    "adapter",
                    format!("{:?}", map.weight.dim()),
                    format!("{:?}", (a.d_out(), a.d_in())),
                ));
            }
            map.adapter = Some(a);
        }
        Ok(())
    }
}

/// `step,loss,lr,eval_acc`, with `eval_acc` empty on steps without evaluation.
pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| TrainError::Parse {
        path: path.into(),
        message: e.to_string(),
    })?;
    for row in trace {
        w.serialize(row).map_err(|e| TrainError::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(TrainError::io(path))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, TrainError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| TrainError::Parse {
        path: path.into(),
        message: e.to_string(),
    })?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| TrainError::Parse {
            path: path.into(),
            message: e.to_string(),
        })
}

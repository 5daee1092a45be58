//! Task means and overall means, computed from unrounded values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unisim_core::TaskFamily;

use crate::error::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Mean over each task's datasets.
    pub tasks: BTreeMap<TaskFamily, f64>,
    /// Mean over task means.
    pub overall: f64,
}

/// Order-independent mean: values are summed in sorted order.
fn mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn aggregate(per_dataset: &[(TaskFamily, f64)]) -> Result<Summary, BenchError> {
    if per_dataset.is_empty() {
        return Err(BenchError::Empty("dataset results"));
    }
    let mut by_task: BTreeMap<TaskFamily, Vec<f64>> = BTreeMap::new();
    for &(task, acc) in per_dataset {
        by_task.entry(task).or_default().push(acc);
    }
    let tasks: BTreeMap<TaskFamily, f64> = by_task
        .into_iter()
        .map(|(t, mut v)| (t, mean(&mut v)))
        .collect();
    let mut means: Vec<f64> = tasks.values().copied().collect();
    let overall = mean(&mut means);
    Ok(Summary { tasks, overall })
}

/// One decimal place, the precision of published tables.
pub fn display(value: f64) -> String {
    format!("{value:.1}")
}

/// A fraction in [0, 1] shown as a percentage with one decimal place.
pub fn display_percent(fraction: f64) -> String {
    display(100.0 * fraction)
}

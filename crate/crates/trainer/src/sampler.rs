//! Round-robin task batches for the multi-task objective.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::TrainError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskBatch {
    pub task: usize,
    /// Indices into [`BalancedSampler::pool`] of `task`.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Pool {
    /// Original indices of the retained samples, at most `cap` of them.
    kept: Vec<usize>,
    order: Vec<usize>,
    cursor: usize,
}

/// Infinite batch stream visiting tasks in turn. Each task's pool is cut to
/// `cap` samples chosen under the seed; an exhausted pool is reshuffled and
/// reused.
#[derive(Debug, Clone)]
pub struct BalancedSampler {
    pools: Vec<Pool>,
    batch_size: usize,
    next_task: usize,
    counts: Vec<usize>,
    rng: ChaCha8Rng,
}

impl BalancedSampler {
    /// `pool_sizes[t]` is the number of samples available for task `t`.
    pub fn new(
        pool_sizes: &[usize],
        batch_size: usize,
        cap: usize,
        seed: u64,
    ) -> Result<Self, TrainError> {
        if batch_size == 0 || cap == 0 {
            return Err(TrainError::Config(
                "batch size and cap must be positive".into(),
            ));
        }
        if pool_sizes.is_empty() {
            return Err(TrainError::Config("no tasks".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pools = Vec::with_capacity(pool_sizes.len());
        for (task, &n) in pool_sizes.iter().enumerate() {
            if n == 0 {
                return Err(TrainError::EmptyTask(task));
            }
            let mut kept: Vec<usize> = (0..n).collect();
            kept.shuffle(&mut rng);
            kept.truncate(cap);
            kept.sort_unstable();
            let mut order: Vec<usize> = (0..kept.len()).collect();
            order.shuffle(&mut rng);
            pools.push(Pool {
                kept,
                order,
                cursor: 0,
            });
        }
        Ok(Self {
            counts: vec![0; pools.len()],
            pools,
            batch_size,
            next_task: 0,
            rng,
        })
    }

    pub fn tasks(&self) -> usize {
        self.pools.len()
    }

    /// Sample indices retained for `task`, ascending.
    pub fn pool(&self, task: usize) -> &[usize] {
        &self.pools[task].kept
    }

    /// Batches drawn so far, per task.
    pub fn batch_counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn next_batch(&mut self) -> TaskBatch {
        let task = self.next_task;
        self.next_task = (task + 1) % self.pools.len();
        self.counts[task] += 1;
        let pool = &mut self.pools[task];
        let mut indices = Vec::with_capacity(self.batch_size);
        while indices.len() < self.batch_size {
            if pool.cursor == pool.order.len() {
                pool.order.shuffle(&mut self.rng);
                pool.cursor = 0;
            }
            indices.push(pool.kept[pool.order[pool.cursor]]);
            pool.cursor += 1;
        }
        TaskBatch { task, indices }
    }

    /// One batch from every task, in task order.
    pub fn next_round(&mut self) -> Vec<TaskBatch> {
        if self.next_task != 0 {
            // finish the partial round first
            while self.next_task != 0 {
                self.next_batch();
            }
        }
        (0..self.pools.len()).map(|_| self.next_batch()).collect()
    }
}

impl Iterator for BalancedSampler {
    type Item = TaskBatch;

    fn next(&mut self) -> Option<TaskBatch> {
        Some(self.next_batch())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn equal_batch_counts() {
        let mut s = BalancedSampler::new(&[5, 1000, 37, 2], 8, 400_000, 1).unwrap();
        for _ in 0..400 {
            s.next_batch();
        }
        assert_eq!(s.batch_counts(), &[100, 100, 100, 100]);
        let tasks: Vec<usize> = s.clone().take(8).map(|b| b.task).collect();
        assert_eq!(tasks, vec![0, 1, 2, 3, 0, 1, 2, 3]);
    }

    #[test]
    fn small_pool_recycles_with_fresh_order() {
        let mut s = BalancedSampler::new(&[10], 10, 400_000, 3).unwrap();
        let epochs: Vec<Vec<usize>> = (0..4).map(|_| s.next_batch().indices).collect();
        for e in &epochs {
            assert_eq!(
                e.iter().copied().collect::<BTreeSet<_>>(),
                (0..10).collect()
            );
        }
        assert!(epochs.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn cap_limits_distinct_samples() {
        let mut s = BalancedSampler::new(&[600], 32, 400, 5).unwrap();
        let mut seen = BTreeSet::new();
        for _ in 0..200 {
            seen.extend(s.next_batch().indices);
        }
        assert_eq!(seen.len(), 400);
        assert_eq!(s.pool(0).len(), 400);
    }

    #[test]
    fn deterministic_under_seed() {
        let run = |seed| {
            let mut s = BalancedSampler::new(&[50, 70], 16, 40, seed).unwrap();
            (0..20).map(|_| s.next_batch()).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn empty_task_is_an_error() {
        assert!(matches!(
            BalancedSampler::new(&[3, 0], 2, 10, 0),
            Err(TrainError::EmptyTask(1))
        ));
    }

    #[test]
    fn rounds_cover_every_task() {
        let mut s = BalancedSampler::new(&[4, 4, 4], 2, 10, 0).unwrap();
        s.next_batch();
        let r = s.next_round();
        assert_eq!(r.iter().map(|b| b.task).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(s.batch_counts(), &[2, 2, 2]);
    }
}

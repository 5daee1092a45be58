//! Uniform sampling of distinct score pairs whose scores differ by more than
//! a gap, within groups that must not be mixed (e.g. images of one prompt).

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::ForgeError;

/// A sampled pair, as indices into the caller's group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScorePair {
    pub group: usize,
    pub better: usize,
    pub worse: usize,
}

struct Sorted {
    order: Vec<usize>,
    scores: Vec<f64>,
}

/// Enumerates eligible pairs implicitly: after sorting a group by score,
/// position `p` pairs with every later position whose score exceeds
/// `score[p] + gap`, which is a suffix of the sorted order.
pub struct PairSampler {
    groups: Vec<Sorted>,
    // (group, sorted position, number of partners), flattened over groups
    rows: Vec<(usize, usize, u64)>,
    cumulative: Vec<u64>,
}

impl PairSampler {
    /// `groups[g][i]` is the score of item `i` of group `g`. Scores must be finite.
    pub fn new(groups: &[Vec<f64>], min_gap: f64) -> Self {
        let mut sorted = Vec::with_capacity(groups.len());
        let mut rows = Vec::new();
        let mut cumulative = Vec::new();
        let mut total = 0u64;
        for (g, scores) in groups.iter().enumerate() {
            debug_assert!(scores.iter().all(|s| s.is_finite()));
            let mut order: Vec<usize> = (0..scores.len()).collect();
            order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
            let s: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
            for p in 0..s.len() {
                let first = s.partition_point(|&x| x <= s[p] + min_gap);
                let count = (s.len() - first) as u64;
                if count > 0 {
                    total += count;
                    rows.push((g, p, count));
                    cumulative.push(total);
                }
            }
            sorted.push(Sorted { order, scores: s });
        }
        Self {
            groups: sorted,
            rows,
            cumulative,
        }
    }

    pub fn eligible(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    fn pair_at(&self, row: usize, offset: u64) -> ScorePair {
        let (g, p, count) = self.rows[row];
        let grp = &self.groups[g];
        let q = grp.scores.len() - count as usize + offset as usize;
        ScorePair {
            group: g,
            better: grp.order[q],
            worse: grp.order[p],
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> ScorePair {
        let r = rng.gen_range(0..self.eligible());
        let row = self.cumulative.partition_point(|&c| c <= r);
        let start = if row == 0 {
            0
        } else {
            self.cumulative[row - 1]
        };
        self.pair_at(row, r - start)
    }

    /// `n` distinct eligible pairs, uniformly at random.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<ScorePair>, ForgeError> {
        let eligible = self.eligible();
        if (n as u64) > eligible {
            return Err(ForgeError::InsufficientPairs {
                requested: n,
                eligible,
            });
        }
        if eligible <= 4 * n as u64 {
            let mut all: Vec<ScorePair> = Vec::with_capacity(eligible as usize);
            for (row, &(_, _, count)) in self.rows.iter().enumerate() {
                all.extend((0..count).map(|k| self.pair_at(row, k)));
            }
            all.shuffle(rng);
            all.truncate(n);
            return Ok(all);
        }
        let attempts = 10 * n;
        let mut seen = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        for _ in 0..attempts {
            if out.len() == n {
                break;
            }
            let pair = self.draw(rng);
            if seen.insert(pair) {
                out.push(pair);
            }
        }
        if out.len() < n {
            return Err(ForgeError::SamplingExhausted {
                requested: n,
                found: out.len(),
                attempts,
            });
        }
        Ok(out)
    }
}

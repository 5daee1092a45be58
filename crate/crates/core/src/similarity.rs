//! Cosine similarity and the decision rules built on it.
//!
//! Everything here is pure; scores are `f64` regardless of the storage
//! precision of the embeddings they came from.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Norms at or below this are treated as zero vectors.
pub const NORM_EPS: f64 = 1e-12;

/// Tolerance for the symmetry check in [`decide_ooo`].
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimilarityError {
    #[error("vector norm {norm:e} is below {NORM_EPS:e}")]
    DegenerateVector { norm: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("tied scores and tie policy is `error`")]
    Tie,
    #[error("need at least 2 alternatives, got {0}")]
    TooFewAlternatives(usize),
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("similarity matrix not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("score is not finite: {0}")]
    NonFinite(f64),
}

/// A similarity value in `[-1, 1]`; NaN is rejected at construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    /// Clamps finite inputs into `[-1, 1]`.
    pub fn new(value: f64) -> Result<Self, SimilarityError> {
        if !value.is_finite() {
            return Err(SimilarityError::NonFinite(value));
        }
        Ok(Self(value.clamp(-1.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SimilarityScore {
    type Error = SimilarityError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<SimilarityScore> for f64 {
    fn from(s: SimilarityScore) -> f64 {
        s.0
    }
}

impl fmt::Display for SimilarityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    #[default]
    PreferFirst,
    Error,
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiePolicy::PreferFirst => "prefer_first",
            TiePolicy::Error => "error",
        })
    }
}

fn l2_norm<T: Copy + Into<f64>>(v: &[T]) -> f64 {
    v.iter().map(|&x| x.into() * x.into()).sum::<f64>().sqrt()
}

pub fn normalize<T: Copy + Into<f64>>(v: &[T]) -> Result<Vec<f64>, SimilarityError> {
    let norm = l2_norm(v);
    if !(norm > NORM_EPS) {
        return Err(SimilarityError::DegenerateVector { norm });
    }
    Ok(v.iter().map(|&x| x.into() / norm).collect())
}

/// Cosine of the angle between `u` and `v`, clamped to `[-1, 1]`.
pub fn cosine_sim<T, U>(u: &[T], v: &[U]) -> Result<SimilarityScore, SimilarityError>
where
    T: Copy + Into<f64>,
    U: Copy + Into<f64>,
{
    if u.len() != v.len() {
        return Err(SimilarityError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let nu = l2_norm(u);
    let nv = l2_norm(v);
    for norm in [nu, nv] {
        if !(norm > NORM_EPS) {
            return Err(SimilarityError::DegenerateVector { norm });
        }
    }
    let dot: f64 = u.iter().zip(v).map(|(&a, &b)| a.into() * b.into()).sum();
    SimilarityScore::new(dot / (nu * nv))
}

/// Index of the larger of two scores.
pub fn decide_2afc(
    s0: SimilarityScore,
    s1: SimilarityScore,
    tie: TiePolicy,
) -> Result<usize, SimilarityError> {
    decide_nafc(&[s0, s1], tie)
}

/// Argmax over `scores`; the first maximum wins under [`TiePolicy::PreferFirst`].
pub fn decide_nafc(scores: &[SimilarityScore], tie: TiePolicy) -> Result<usize, SimilarityError> {
    if scores.len() < 2 {
        return Err(SimilarityError::TooFewAlternatives(scores.len()));
    }
    let mut best = 0;
    let mut tied = false;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if s.0 > scores[best].0 {
            best = i;
            tied = false;
        } else if s.0 == scores[best].0 {
            tied = true;
        }
    }
    if tied && tie == TiePolicy::Error {
        return Err(SimilarityError::Tie);
    }
    Ok(best)
}

/// Softmax weight of the "good" prompt over a good/bad prompt pair:
/// `exp(τ·s_g) / (exp(τ·s_g) + exp(τ·s_b))`, i.e. the logistic of `τ·(s_g − s_b)`.
pub fn iqa_prompt_pair_score(
    sim_good: SimilarityScore,
    sim_bad: SimilarityScore,
    tau: f64,
) -> Result<f64, SimilarityError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(SimilarityError::InvalidTemperature(tau));
    }
    let d = tau * (sim_good.0 - sim_bad.0);
    // shift by the larger logit so the exponent is never positive
    Ok(if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    })
}

/// Odd one out of three items given their pairwise similarities: the item
/// with the smallest sum of similarities to the other two. Ties go to the
/// lowest index. The diagonal is ignored.
pub fn decide_ooo(sim: &[[f64; 3]; 3]) -> Result<usize, SimilarityError> {
    for i in 0..3 {
        for j in (i + 1)..3 {
            if !sim[i][j].is_finite() {
                return Err(SimilarityError::NonFinite(sim[i][j]));
            }
            if (sim[i][j] - sim[j][i]).abs() > SYMMETRY_TOL {
                return Err(SimilarityError::Asymmetric(i, j));
            }
        }
    }
    let row_sum = |i: usize| (0..3).filter(|&j| j != i).map(|j| sim[i][j]).sum::<f64>();
    let mut best = 0;
    let mut best_sum = row_sum(0);
    for i in 1..3 {
        let s = row_sum(i);
        if s < best_sum {
            best = i;
            best_sum = s;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: f64) -> SimilarityScore {
        SimilarityScore::new(v).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn normalize_examples() {
        assert!(close(&normalize(&[3.0, 4.0]).unwrap(), &[0.6, 0.8]));
        assert!(close(&normalize(&[0.0, 5.0]).unwrap(), &[0.0, 1.0]));
        assert!(close(
            &normalize(&[1.0f32, 1.0, 1.0, 1.0]).unwrap(),
            &[0.5; 4]
        ));
        assert!(matches!(
            normalize(&[0.0, 1e-13]),
            Err(SimilarityError::DegenerateVector { .. })
        ));
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(
            cosine_sim(&[0.3, -2.0, 7.0], &[0.3, -2.0, 7.0])
                .unwrap()
                .value(),
            1.0
        );
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap().value(), 0.0);
        let c = cosine_sim(&[1.0, 0.0], &[1.0, 1.0]).unwrap().value();
        assert!((c - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            cosine_sim(&[1.0, 0.0], &[1.0]),
            Err(SimilarityError::DimensionMismatch { left: 2, right: 1 })
        ));
        assert!(matches!(
            cosine_sim(&[1.0, 0.0], &[0.0, 0.0]),
            Err(SimilarityError::DegenerateVector { .. })
        ));
    }

    #[test]
    fn scores_reject_nan_and_clamp() {
        assert!(SimilarityScore::new(f64::NAN).is_err());
        assert_eq!(SimilarityScore::new(1.0000000002).unwrap().value(), 1.0);
        assert!(serde_json::from_str::<SimilarityScore>("0.25").is_ok());
    }

    #[test]
    fn two_afc_examples() {
        assert_eq!(
            decide_2afc(s(0.8), s(0.3), TiePolicy::PreferFirst).unwrap(),
            0
        );
        assert_eq!(
            decide_2afc(s(0.3), s(0.8), TiePolicy::PreferFirst).unwrap(),
            1
        );
        assert_eq!(
            decide_2afc(s(0.5), s(0.5), TiePolicy::PreferFirst).unwrap(),
            0
        );
        assert_eq!(
            decide_2afc(s(0.5), s(0.5), TiePolicy::Error),
            Err(SimilarityError::Tie)
        );
    }

    #[test]
    fn nafc_examples() {
        let p = TiePolicy::PreferFirst;
        assert_eq!(decide_nafc(&[s(0.1), s(0.9), s(0.2)], p).unwrap(), 1);
        assert_eq!(decide_nafc(&[s(0.4), s(0.4), s(0.4)], p).unwrap(), 0);
        assert_eq!(
            decide_nafc(&[s(0.4)], p),
            Err(SimilarityError::TooFewAlternatives(1))
        );
        // a tie below the maximum is not a tie
        assert_eq!(
            decide_nafc(&[s(0.1), s(0.1), s(0.9)], TiePolicy::Error).unwrap(),
            2
        );
        assert_eq!(
            decide_nafc(&[s(0.9), s(0.1), s(0.9)], TiePolicy::Error),
            Err(SimilarityError::Tie)
        );
    }

    #[test]
    fn prompt_pair_examples() {
        assert_eq!(iqa_prompt_pair_score(s(0.3), s(0.3), 100.0).unwrap(), 0.5);
        // logistic(0.2) evaluated as 1 / (1 + e^-0.2)
        let oracle_small = 1.0 / (1.0 + (-0.2f64).exp());
        let got = iqa_prompt_pair_score(s(0.5), s(0.3), 1.0).unwrap();
        assert!((got - oracle_small).abs() < 1e-12);
        assert!((got - 0.549834).abs() < 1e-6);
        // logistic(20): 1 - e^-20 / (1 + e^-20)
        let got = iqa_prompt_pair_score(s(0.5), s(0.3), 100.0).unwrap();
        assert!((1.0 - got - 2.061e-9).abs() < 1e-12, "{}", 1.0 - got);
        assert!(iqa_prompt_pair_score(s(0.5), s(0.3), 0.0).is_err());
        assert!(iqa_prompt_pair_score(s(0.5), s(0.3), -1.0).is_err());
    }

    #[test]
    fn prompt_pair_extremes_stay_finite() {
        let hi = iqa_prompt_pair_score(s(1.0), s(-1.0), 1e6).unwrap();
        let lo = iqa_prompt_pair_score(s(-1.0), s(1.0), 1e6).unwrap();
        assert!(hi.is_finite() && lo.is_finite());
        assert!(hi > 0.5 && lo < 0.5 && lo >= 0.0);
    }

    fn sym(s01: f64, s02: f64, s12: f64) -> [[f64; 3]; 3] {
        [[1.0, s01, s02], [s01, 1.0, s12], [s02, s12, 1.0]]
    }

    #[test]
    fn ooo_examples() {
        assert_eq!(decide_ooo(&sym(0.9, 0.1, 0.1)).unwrap(), 2);
        assert_eq!(decide_ooo(&sym(0.4, 0.4, 0.4)).unwrap(), 0);
        // row sums 0.7, 0.8, 1.1 computed by hand
        assert_eq!(decide_ooo(&sym(0.2, 0.5, 0.6)).unwrap(), 0);
        let mut bad = sym(0.2, 0.5, 0.6);
        bad[1][0] = 0.3;
        assert_eq!(decide_ooo(&bad), Err(SimilarityError::Asymmetric(0, 1)));
    }

    #[test]
    fn nafc_matches_brute_force_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let n = rng.gen_range(2..10);
            // coarse grid so ties occur
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64 / 4.0).collect();
            let scores: Vec<_> = raw.iter().map(|&v| s(v)).collect();
            let mut expect = 0;
            for i in 0..n {
                if raw[i] > raw[expect] {
                    expect = i;
                }
            }
            assert_eq!(
                decide_nafc(&scores, TiePolicy::PreferFirst).unwrap(),
                expect
            );
        }
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            u in prop::collection::vec(-10.0f64..10.0, 5),
            v in prop::collection::vec(-10.0f64..10.0, 5),
            a in 0.01f64..100.0,
        ) {
            prop_assume!(l2_norm(&u) > 1e-3 && l2_norm(&v) > 1e-3);
            let uv = cosine_sim(&u, &v).unwrap().value();
            let vu = cosine_sim(&v, &u).unwrap().value();
            prop_assert_eq!(uv, vu);
            let scaled: Vec<f64> = u.iter().map(|x| x * a).collect();
            prop_assert!((cosine_sim(&scaled, &v).unwrap().value() - uv).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&uv));
        }

        #[test]
        fn normalize_yields_unit_norm(v in prop::collection::vec(-1e3f64..1e3, 1..20)) {
            prop_assume!(l2_norm(&v) > 1e-6);
            let n = normalize(&v).unwrap();
            prop_assert!((l2_norm(&n) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn decisions_invariant_under_monotone_transform(
            raw in prop::collection::vec(-1.0f64..1.0, 2..8),
        ) {
            let scores: Vec<_> = raw.iter().map(|&v| s(v)).collect();
            // strictly increasing map that stays inside [-1, 1]
            let mapped: Vec<_> = raw.iter().map(|&v| s(((v * 3.0).tanh() + v.powi(3)) / 2.0)).collect();
            prop_assert_eq!(
                decide_nafc(&scores, TiePolicy::PreferFirst).unwrap(),
                decide_nafc(&mapped, TiePolicy::PreferFirst).unwrap()
            );
            if raw.len() == 2 {
                prop_assert_eq!(
                    decide_2afc(scores[0], scores[1], TiePolicy::PreferFirst).unwrap(),
                    decide_nafc(&scores, TiePolicy::PreferFirst).unwrap()
                );
            }
        }

        #[test]
        fn prompt_pair_monotone_in_difference(
            g in -1.0f64..1.0, b in -1.0f64..1.0, delta in 1e-6f64..0.5, tau in 0.1f64..50.0,
        ) {
            let base = iqa_prompt_pair_score(s(g), s(b), tau).unwrap();
            let b2 = (b - delta).max(-1.0);
            prop_assume!(b2 < b);
            // the logistic saturates to 1.0 in f64 beyond ~36
            prop_assume!(tau * (g - b2) < 30.0);
            let higher = iqa_prompt_pair_score(s(g), s(b2), tau).unwrap();
            prop_assert!(higher > base);
        }

        #[test]
        fn ooo_invariant_under_offdiagonal_shift(
            s01 in -0.5f64..0.5, s02 in -0.5f64..0.5, s12 in -0.5f64..0.5, c in -0.4f64..0.4,
        ) {
            let sums = [s01 + s02, s01 + s12, s02 + s12];
            // skip near-ties where the shift could reorder by rounding
            let gap = |a: f64, b: f64| (a - b).abs() > 1e-9;
            prop_assume!(gap(sums[0], sums[1]) && gap(sums[0], sums[2]) && gap(sums[1], sums[2]));
            prop_assert_eq!(
                decide_ooo(&sym(s01, s02, s12)).unwrap(),
                decide_ooo(&sym(s01 + c, s02 + c, s12 + c)).unwrap()
            );
        }
    }
}

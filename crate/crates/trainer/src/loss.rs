//! Margin hinge loss on similarity pairs and its multi-task sum.

use crate::error::TrainError;

/// `max{0, (2y-1)(s0-s1) + mu}`: zero once the preferred candidate
/// `cand[y]` beats the other by at least `mu`.
pub fn hinge_loss(s0: f64, s1: f64, y: u8, mu: f64) -> f64 {
    debug_assert!(y <= 1 && mu >= 0.0);
    let a = hinge_argument(s0, s1, y, mu);
    if a.is_nan() {
        a
    } else {
        a.max(0.0)
    }
}

fn hinge_argument(s0: f64, s1: f64, y: u8, mu: f64) -> f64 {
    let sign = if y == 1 { 1.0 } else { -1.0 };
    sign * (s0 - s1) + mu
}

/// Subgradient `(dL/ds0, dL/ds1)`; zero at the kink.
pub fn hinge_grad(s0: f64, s1: f64, y: u8, mu: f64) -> (f64, f64) {
    if hinge_argument(s0, s1, y, mu) > 0.0 {
        let sign = if y == 1 { 1.0 } else { -1.0 };
        (sign, -sign)
    } else {
        (0.0, 0.0)
    }
}

/// Distance of the hinge argument from its kink.
pub fn kink_distance(s0: f64, s1: f64, y: u8, mu: f64) -> f64 {
    hinge_argument(s0, s1, y, mu).abs()
}

/// Sum over tasks of the summed per-sample losses. Each batch holds
/// `(s0, s1, y)` for one task.
pub fn multi_task_loss(batches: &[&[(f64, f64, u8)]], mu: f64) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (task, batch) in batches.iter().enumerate() {
        if batch.is_empty() {
            return Err(TrainError::EmptyBatch(task));
        }
        total += batch
            .iter()
            .map(|&(s0, s1, y)| hinge_loss(s0, s1, y, mu))
            .sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_values() {
        assert_eq!(hinge_loss(0.9, 0.1, 0, 0.05), 0.0);
        assert!((hinge_loss(0.9, 0.1, 1, 0.05) - 0.85).abs() < 1e-15);
        assert_eq!(hinge_loss(0.4, 0.4, 0, 0.05), 0.05);
        assert_eq!(hinge_loss(0.4, 0.4, 1, 0.05), 0.05);
        assert!(hinge_loss(f64::NAN, 0.4, 1, 0.05).is_nan());
    }

    #[test]
    fn multi_task_sums() {
        let a = [(0.2, 0.4, 0u8), (0.5, 0.5, 1)];
        let b = [(0.1, 0.7, 0u8)];
        // 0.25 + 0.05 and 0.65
        let got = multi_task_loss(&[&a, &b], 0.05).unwrap();
        assert!((got - 0.95).abs() < 1e-12);
        assert_eq!(
            multi_task_loss(&[&a], 0.05).unwrap(),
            hinge_loss(0.2, 0.4, 0, 0.05) + 0.05
        );
        assert!(matches!(
            multi_task_loss(&[&a, &[]], 0.05),
            Err(TrainError::EmptyBatch(1))
        ));
    }

    #[test]
    fn gradient_is_zero_at_the_kink() {
        assert_eq!(hinge_grad(0.55, 0.5, 0, 0.05), (0.0, 0.0));
        assert_eq!(hinge_grad(0.5, 0.55, 0, 0.05), (-1.0, 1.0));
    }

    proptest! {
        #[test]
        fn nonnegative_and_flip_symmetric(s0 in -1.0..1.0f64, s1 in -1.0..1.0f64, y in 0u8..2, mu in 0.0..0.5f64) {
            let l = hinge_loss(s0, s1, y, mu);
            prop_assert!(l >= 0.0);
            prop_assert_eq!(l, hinge_loss(s1, s0, 1 - y, mu));
            let (good, bad) = if y == 0 { (s0, s1) } else { (s1, s0) };
            prop_assert_eq!(l == 0.0, good - bad >= mu);
        }
    }
}

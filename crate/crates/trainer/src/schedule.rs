use std::f64::consts::PI;

use crate::config::TrainConfig;
use crate::error::TrainError;

/// Linear warmup from 0 to `max_lr`, then cosine decay to 0 at `total_steps`.
pub fn lr_at(step: usize, cfg: &TrainConfig) -> Result<f64, TrainError> {
    let (warmup, total) = (cfg.warmup_steps, cfg.total_steps);
    if step > total {
        return Err(TrainError::StepOutOfRange { step, total });
    }
    if step < warmup {
        return Ok(cfg.max_lr * step as f64 / warmup as f64);
    }
    if total == warmup {
        return Ok(cfg.max_lr);
    }
    let progress = (step - warmup) as f64 / (total - warmup) as f64;
    Ok(cfg.max_lr * 0.5 * (1.0 + (PI * progress).cos()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrainConfig {
        TrainConfig {
            warmup_steps: 500,
            total_steps: 1500,
            ..Default::default()
        }
    }

    #[test]
    fn anchor_points() {
        let c = cfg();
        assert_eq!(lr_at(0, &c).unwrap(), 0.0);
        assert_eq!(lr_at(250, &c).unwrap(), 2.5e-6);
        assert_eq!(lr_at(500, &c).unwrap(), 5e-6);
        assert!((lr_at(1000, &c).unwrap() - 2.5e-6).abs() < 1e-18);
        assert!(lr_at(1500, &c).unwrap().abs() < 1e-20);
        assert!(matches!(
            lr_at(1501, &c),
            Err(TrainError::StepOutOfRange { .. })
        ));
    }

    #[test]
    fn monotone_pieces() {
        let c = cfg();
        let lrs: Vec<f64> = (0..=1500).map(|s| lr_at(s, &c).unwrap()).collect();
        assert!(lrs[..=500].windows(2).all(|w| w[0] < w[1]));
        assert!(lrs[500..].windows(2).all(|w| w[0] >= w[1]));
    }
}

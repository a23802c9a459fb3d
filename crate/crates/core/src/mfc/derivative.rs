use serde::{Deserialize, Serialize};

use crate::algediff::{AlgebraicDifferentiator, DiffConfig};
use crate::error::{invalid, Result};
use crate::SECS_PER_HOUR;

/// How the controller estimates `ẏ` from the sampled output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DerivativeMethod {
    /// Backward difference of an exponentially smoothed output; `smoothing`
    /// is the EMA factor in (0, 1] (1 disables smoothing).
    BackwardDifference { smoothing: f64 },
    /// Sliding-window algebraic differentiator.
    Algebraic(DiffConfig),
}

impl Default for DerivativeMethod {
    fn default() -> Self {
        DerivativeMethod::BackwardDifference { smoothing: 0.5 }
    }
}

/// Streaming estimate of `ẏ` (output units per hour), one sample per
/// control period.
#[derive(Debug, Clone)]
pub struct OutputDerivative {
    period_h: f64,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Backward { smoothing: f64, filtered: Option<f64>, previous: Option<f64> },
    Algebraic { diff: Box<AlgebraicDifferentiator>, k: u64 },
}

impl OutputDerivative {
    pub fn new(method: DerivativeMethod, period_h: f64) -> Result<Self> {
        if !(period_h > 0.0) {
            return Err(invalid("control period must be > 0"));
        }
        let inner = match method {
            DerivativeMethod::BackwardDifference { smoothing } => {
                if !(smoothing > 0.0 && smoothing <= 1.0) {
                    return Err(invalid(format!("smoothing must lie in (0, 1], got {smoothing}")));
                }
                Inner::Backward { smoothing, filtered: None, previous: None }
            }
            DerivativeMethod::Algebraic(cfg) => Inner::Algebraic {
                diff: Box::new(AlgebraicDifferentiator::new(period_h * SECS_PER_HOUR, cfg)?),
                k: 0,
            },
        };
        Ok(Self { period_h, inner })
    }

    /// Feeds the next output sample; `None` while warming up.
    pub fn push(&mut self, y: f64) -> Result<Option<f64>> {
        match &mut self.inner {
            Inner::Backward { smoothing, filtered, previous } => {
                let next = match *filtered {
                    Some(f) => f + *smoothing * (y - f),
                    None => y,
                };
                *previous = *filtered;
                *filtered = Some(next);
                Ok(previous.map(|p| (next - p) / self.period_h))
            }
            Inner::Algebraic { diff, k } => {
                let t_s = *k as f64 * self.period_h * SECS_PER_HOUR;
                *k += 1;
                Ok(diff.push(t_s, y)?.map(|e| e.d1 * SECS_PER_HOUR))
            }
        }
    }
}

/// Backward difference of the EMA-smoothed `samples` (oldest first), in
/// units per hour for a period of `period_h` hours.
pub fn estimate_output_derivative(samples: &[f64], period_h: f64, smoothing: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(invalid("need at least two samples"));
    }
    let mut d = OutputDerivative::new(DerivativeMethod::BackwardDifference { smoothing }, period_h)?;
    let mut last = None;
    for &y in samples {
        last = d.push(y)?;
    }
    Ok(last.expect("two or more samples yield an estimate"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TS: f64 = 20.0 / 3600.0;

    #[test]
    fn constant_output_has_zero_slope() {
        assert_eq!(estimate_output_derivative(&[25.0; 10], TS, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn ramp_slope_after_warm_up() {
        let c = 36.0;
        let ramp: Vec<f64> = (0..200).map(|k| 20.0 + c * k as f64 * TS).collect();
        let est = estimate_output_derivative(&ramp, TS, 0.3).unwrap();
        assert!((est - c).abs() < 1e-9, "{est}");
        // unsmoothed is exact immediately
        assert!((estimate_output_derivative(&ramp[..2], TS, 1.0).unwrap() - c).abs() < 1e-9);
    }

    #[test]
    fn needs_two_samples() {
        assert!(estimate_output_derivative(&[1.0], TS, 0.5).is_err());
        assert!(estimate_output_derivative(&[1.0, 2.0], TS, 0.0).is_err());
    }

    #[test]
    fn algebraic_mode_reports_per_hour() {
        let c = 90.0;
        let mut d = OutputDerivative::new(DerivativeMethod::Algebraic(DiffConfig::first_derivative()), TS).unwrap();
        let mut last = None;
        for k in 0..40 {
            last = d.push(10.0 + c * k as f64 * TS).unwrap().or(last);
        }
        assert!((last.unwrap() - c).abs() < 1e-6);
    }
}

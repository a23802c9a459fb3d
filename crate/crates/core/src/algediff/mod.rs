//! Algebraic differentiation of noisy sampled signals.
//!
//! A signal is modelled on a short window as a truncated Taylor polynomial
//! `x(τ) = Σ a_k τ^k`. In the operational domain `s^{N+1} X(s)` is a
//! polynomial in `s` whose coefficients are the `a_k`; differentiating that
//! identity with respect to `s` (multiplication by `−τ` in time) yields a
//! triangular system for the coefficients. Multiplying every equation by a
//! negative power of `s` turns all the terms into iterated time integrals
//! over the window, which act as low-pass filters on the noise.
//!
//! Because every estimate is a fixed linear functional of the window
//! samples, the functionals are precomputed once per configuration
//! ([`Kernel`]) and applied as dot products when the window slides.

mod kernel;
mod quadrature;
mod stream;
mod window;

pub use kernel::{estimate_coeffs, estimate_coeffs_deg1, estimate_coeffs_deg2, Kernel, LocalFit};
pub use stream::{derivative_stream, AlgebraicDifferentiator, DerivativeEstimate};
pub use window::{DerivativeWindow, PushOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Where along the window the fitted polynomial is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPoint {
    /// The point where the highest-order coefficient estimate is exact for
    /// polynomials one degree above the model (the window midpoint for
    /// first-degree models with two integrations). Estimates are still
    /// emitted at the window end.
    #[default]
    Delayed,
    /// Extrapolate the fitted polynomial to the newest sample.
    WindowEnd,
}

/// Configuration of one differentiator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffConfig {
    /// Taylor truncation degree `N` (1 or 2).
    pub degree: usize,
    /// Window duration (s).
    pub window_s: f64,
    /// Extra integrations `n >= 2`: every equation is multiplied by
    /// `s^-(N + n)`.
    pub integral_order: usize,
    #[serde(default)]
    pub eval_point: EvalPoint,
    /// Longest run of missing samples bridged by interpolation.
    #[serde(default = "default_max_fill")]
    pub max_fill: usize,
}

fn default_max_fill() -> usize {
    3
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self::first_derivative()
    }
}

impl DiffConfig {
    /// Degree 1 over a 300 s window.
    pub fn first_derivative() -> Self {
        Self {
            degree: 1,
            window_s: 300.0,
            integral_order: 2,
            eval_point: EvalPoint::Delayed,
            max_fill: 3,
        }
    }

    /// Degree 2 over a 600 s window.
    pub fn second_derivative() -> Self {
        Self { degree: 2, window_s: 600.0, ..Self::first_derivative() }
    }

    /// Number of samples spanning the window at `sample_period_s`.
    pub fn samples(&self, sample_period_s: f64) -> usize {
        (self.window_s / sample_period_s).round() as usize + 1
    }

    pub fn validate(&self, sample_period_s: f64) -> Result<()> {
        if !(1..=2).contains(&self.degree) {
            return Err(invalid(format!("degree must be 1 or 2, got {}", self.degree)));
        }
        if self.integral_order < 2 {
            return Err(invalid(format!(
                "integral order must be >= 2, got {}",
                self.integral_order
            )));
        }
        if !(sample_period_s > 0.0 && self.window_s > 0.0) {
            return Err(invalid("window and sample period must be > 0"));
        }
        let n = self.samples(sample_period_s);
        if n < self.degree + 2 {
            return Err(invalid(format!(
                "window of {} s holds {n} samples, need at least {}",
                self.window_s,
                self.degree + 2
            )));
        }
        Ok(())
    }
}

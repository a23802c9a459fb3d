use super::{DerivativeWindow, DiffConfig, Kernel, PushOutcome};
use crate::error::Result;

/// One streaming derivative estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    /// Time of the sample that completed the window.
    pub t_emit: f64,
    /// Time the values below refer to.
    pub t_ref: f64,
    /// Smoothed signal value at `t_ref`.
    pub value: f64,
    /// First derivative at `t_ref` (signal units per time unit).
    pub d1: f64,
    /// Second derivative at `t_ref`, for degree-2 models.
    pub d2: Option<f64>,
}

/// Sliding-window differentiator: one estimate per sample once warm.
#[derive(Debug, Clone)]
pub struct AlgebraicDifferentiator {
    cfg: DiffConfig,
    window: DerivativeWindow,
    kernel: Kernel,
}

impl AlgebraicDifferentiator {
    pub fn new(sample_period_s: f64, cfg: DiffConfig) -> Result<Self> {
        let kernel = Kernel::from_config(&cfg, sample_period_s)?;
        let window = DerivativeWindow::new(sample_period_s, &cfg)?;
        Ok(Self { cfg, window, kernel })
    }

    pub fn config(&self) -> &DiffConfig {
        &self.cfg
    }

    pub fn window(&self) -> &DerivativeWindow {
        &self.window
    }

    /// Delay between the newest sample and the reference time.
    pub fn latency(&self) -> f64 {
        let span = (self.kernel.len() - 1) as f64 * self.window.sample_period();
        match self.cfg.eval_point {
            super::EvalPoint::Delayed => (1.0 - self.kernel.tau_star()) * span,
            super::EvalPoint::WindowEnd => 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.window.clear();
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<Option<DerivativeEstimate>> {
        let outcome = self.window.push(t, value)?;
        if outcome == PushOutcome::Restarted || !self.window.is_full() {
            return Ok(None);
        }
        let fit = self.kernel.fit(self.window.values(), self.window.t_start(), self.window.span());
        let t_ref = fit.reference_time(self.cfg.eval_point);
        Ok(Some(DerivativeEstimate {
            t_emit: t,
            t_ref,
            value: fit.value_at(t_ref),
            d1: fit.derivative_at(t_ref, 1),
            d2: (self.kernel.degree() >= 2).then(|| fit.derivative_at(t_ref, 2)),
        }))
    }
}

/// Runs a differentiator over a whole series of `(t, value)` samples.
pub fn derivative_stream(
    samples: &[(f64, f64)],
    sample_period_s: f64,
    cfg: DiffConfig,
) -> Result<Vec<DerivativeEstimate>> {
    let mut diff = AlgebraicDifferentiator::new(sample_period_s, cfg)?;
    let mut out = Vec::with_capacity(samples.len());
    for &(t, x) in samples {
        if let Some(est) = diff.push(t, x)? {
            out.push(est);
        }
    }
    Ok(out)
}

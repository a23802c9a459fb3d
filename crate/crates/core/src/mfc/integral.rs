use std::collections::VecDeque;

use super::IpiGains;
use crate::error::{invalid, Error, Result};

/// One control-period snapshot of the quantities entering the integral
/// estimate of `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FSample {
    /// Applied control.
    pub u: f64,
    pub y_star_dot: f64,
    pub e: f64,
    pub integral: f64,
}

/// Sliding window over the last `δ` of [`FSample`]s.
#[derive(Debug, Clone)]
pub struct FWindow {
    delta_h: f64,
    capacity: usize,
    buf: VecDeque<FSample>,
}

impl FWindow {
    /// `delta_h` is the integration horizon and `period_h` the sample period,
    /// both in hours. The horizon must cover at least two samples.
    pub fn new(delta_h: f64, period_h: f64) -> Result<Self> {
        if !(delta_h > 0.0 && period_h > 0.0) {
            return Err(invalid("integration horizon and period must be > 0"));
        }
        let intervals = (delta_h / period_h).round() as usize;
        if intervals < 1 {
            return Err(invalid(format!(
                "horizon {delta_h} h spans fewer than two samples of {period_h} h"
            )));
        }
        Ok(Self {
            delta_h: intervals as f64 * period_h,
            capacity: intervals + 1,
            buf: VecDeque::with_capacity(intervals + 1),
        })
    }

    pub fn push(&mut self, sample: FSample) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(sample);
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn delta_h(&self) -> f64 {
        self.delta_h
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }
}

/// Piecewise-constant estimate
/// `F ≈ (1/δ) ∫_{T−δ}^{T} (−α u + ẏ* − K_P e − K_I ∫e) dτ`
/// by the trapezoidal rule over the window.
///
/// While the loop is unsaturated the integrand equals the controller's own
/// `[F]_e` at each sample, so in steady state this reproduces the
/// derivative-based estimate averaged over `δ`.
pub fn estimate_f_integral(win: &FWindow, alpha: f64, gains: &IpiGains) -> Result<f64> {
    if !win.is_full() {
        return Err(Error::WindowUnderfull { have: win.len(), need: win.capacity });
    }
    let integrand = |s: &FSample| -alpha * s.u + s.y_star_dot - gains.kp * s.e - gains.ki * s.integral;
    let n = win.buf.len();
    let interior: f64 = win.buf.iter().skip(1).take(n - 2).map(integrand).sum();
    let ends = 0.5 * (integrand(&win.buf[0]) + integrand(&win.buf[n - 1]));
    Ok((interior + ends) / (n - 1) as f64)
}

use std::collections::VecDeque;

use super::DiffConfig;
use crate::error::{invalid, Result};

/// Relative deviation from the nominal period tolerated between samples.
const MAX_JITTER: f64 = 0.01;

/// What happened to a pushed sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushOutcome {
    Appended,
    /// Appended after bridging this many missing samples by interpolation.
    Filled(usize),
    /// Irregular spacing or a long gap: the window was discarded and
    /// restarted from this sample.
    Restarted,
}

/// Fixed-duration ring of uniformly spaced `(t, value)` samples.
#[derive(Debug, Clone)]
pub struct DerivativeWindow {
    sample_period: f64,
    capacity: usize,
    max_fill: usize,
    buf: VecDeque<(f64, f64)>,
    filled: usize,
    restarts: usize,
}

impl DerivativeWindow {
    pub fn new(sample_period_s: f64, cfg: &DiffConfig) -> Result<Self> {
        cfg.validate(sample_period_s)?;
        let capacity = cfg.samples(sample_period_s);
        Ok(Self {
            sample_period: sample_period_s,
            capacity,
            max_fill: cfg.max_fill,
            buf: VecDeque::with_capacity(capacity),
            filled: 0,
            restarts: 0,
        })
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<PushOutcome> {
        if !t.is_finite() || !value.is_finite() {
            return Err(invalid(format!("non-finite sample ({t}, {value})")));
        }
        let Some(&(t_last, x_last)) = self.buf.back() else {
            self.append(t, value);
            return Ok(PushOutcome::Appended);
        };
        let gap = t - t_last;
        if gap <= 0.0 {
            return Err(invalid(format!(
                "timestamps must increase strictly ({t} after {t_last})"
            )));
        }
        let steps = (gap / self.sample_period).round();
        let jitter = (gap - steps * self.sample_period).abs() / self.sample_period;
        if steps < 1.0 || jitter > MAX_JITTER || steps as usize - 1 > self.max_fill {
            self.buf.clear();
            self.restarts += 1;
            self.append(t, value);
            return Ok(PushOutcome::Restarted);
        }
        let missing = steps as usize - 1;
        for k in 1..=missing {
            let frac = k as f64 / steps;
            self.append(t_last + frac * gap, x_last + frac * (value - x_last));
        }
        self.filled += missing;
        self.append(t, value);
        Ok(if missing > 0 { PushOutcome::Filled(missing) } else { PushOutcome::Appended })
    }

    fn append(&mut self, t: f64, value: f64) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back((t, value));
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// Nominal duration covered by the buffered samples.
    pub fn span(&self) -> f64 {
        self.buf.len().saturating_sub(1) as f64 * self.sample_period
    }

    /// Start of the window, anchored on the newest sample.
    pub fn t_start(&self) -> f64 {
        self.buf.back().map_or(0.0, |&(t, _)| t - self.span())
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> + Clone {
        self.buf.iter().map(|(_, x)| x)
    }

    /// Samples synthesised by interpolation so far.
    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }
}

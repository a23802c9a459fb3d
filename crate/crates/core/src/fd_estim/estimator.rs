use std::collections::{HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::algebra::{
    chain_rule_derivative, estimate_a, estimate_k, estimate_rho_c, estimate_vf, log_derivative,
    Rejection,
};
use crate::algediff::{AlgebraicDifferentiator, DerivativeEstimate, DiffConfig};
use crate::error::{invalid, Error, Result};
use crate::SECS_PER_HOUR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Detector sampling period (s).
    pub sample_period_s: f64,
    /// Minimum `|ρ̇|` (veh/km/lane/h).
    pub eps_rho_dot: f64,
    /// Minimum `|W|` (lane·km/veh).
    pub eps_w: f64,
    /// Valid samples kept for the running median.
    pub median_window: usize,
    pub a_min: f64,
    pub a_max: f64,
    /// Differentiator applied to density and speed.
    pub diff: DiffConfig,
    /// Differentiator applied to the `W` series.
    pub w_diff: DiffConfig,
    /// Interval between estimator updates (s); a multiple of the sample
    /// period. Between updates the published estimate is held.
    pub update_period_s: f64,
    /// Consecutive rejected updates after which the regime is flagged
    /// uninformative.
    pub uninformative_after: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            sample_period_s: 20.0,
            eps_rho_dot: 0.5,
            eps_w: 1e-4,
            median_window: 50,
            a_min: 0.5,
            a_max: 8.0,
            diff: DiffConfig::first_derivative(),
            w_diff: DiffConfig::first_derivative(),
            update_period_s: 20.0,
            uninformative_after: 90,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_rho_dot >= 0.0 && self.eps_w >= 0.0) {
            return Err(invalid("guards must be >= 0"));
        }
        if self.median_window == 0 {
            return Err(invalid("median_window must be >= 1"));
        }
        if !(self.a_min > 0.0 && self.a_min < self.a_max) {
            return Err(invalid("need 0 < a_min < a_max"));
        }
        let ratio = self.update_period_s / self.sample_period_s;
        if !(ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() < 1e-9) {
            return Err(invalid("update_period_s must be a whole multiple of sample_period_s"));
        }
        self.diff.validate(self.sample_period_s)?;
        self.w_diff.validate(self.sample_period_s)
    }
}

/// Published diagram parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Published {
    pub a: f64,
    pub k: f64,
    pub rho_c: f64,
    pub v_f: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RejectionCounts {
    pub samples: usize,
    pub accepted: usize,
    pub by_reason: HashMap<Rejection, usize>,
}

impl RejectionCounts {
    pub fn rejected(&self) -> usize {
        self.samples - self.accepted
    }

    /// Rejected fraction of samples past warm-up.
    pub fn rejection_rate(&self) -> f64 {
        let warm = self.by_reason.get(&Rejection::Warmup).copied().unwrap_or(0);
        let informative = self.samples - warm;
        if informative == 0 {
            return 1.0;
        }
        (self.rejected() - warm) as f64 / informative as f64
    }
}

/// Snapshot of an estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub published: Option<Published>,
    pub counts: RejectionCounts,
    /// Current run of consecutive rejections.
    pub streak: usize,
    pub eps_rho_dot: f64,
    pub eps_w: f64,
    pub median_window: usize,
}

/// One output line per input sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub t: f64,
    /// Time the raw quantities refer to, once both differentiation stages
    /// are warm.
    pub t_ref: Option<f64>,
    pub rho_ref: Option<f64>,
    pub rho_dot_ref: Option<f64>,
    pub w_ref: Option<f64>,
    pub a_raw: Option<f64>,
    /// Held estimate; `None` until the first valid sample.
    pub published: Option<Published>,
    pub rejected: Option<Rejection>,
}

#[derive(Debug, Clone, Copy)]
struct Smoothed {
    t: f64,
    rho: f64,
    rho_dot: f64,
    v: f64,
}

#[derive(Debug, Clone, Copy)]
struct Valid {
    rho: f64,
    w: f64,
    v: f64,
    a: f64,
}

/// Streaming diagram estimator for one detector station.
#[derive(Debug, Clone)]
pub struct FdEstimator {
    cfg: EstimatorConfig,
    d_rho: AlgebraicDifferentiator,
    d_v: AlgebraicDifferentiator,
    d_w: AlgebraicDifferentiator,
    history: VecDeque<Smoothed>,
    history_cap: usize,
    valid: VecDeque<Valid>,
    published: Option<Published>,
    counts: RejectionCounts,
    streak: usize,
    next_update: Option<f64>,
}

fn median(xs: &mut [f64]) -> f64 {
    let n = xs.len();
    let mid = n / 2;
    let (_, &mut hi, _) = xs.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        hi
    } else {
        let lo = xs[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

impl FdEstimator {
    pub fn new(cfg: EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        let dt = cfg.sample_period_s;
        Ok(Self {
            d_rho: AlgebraicDifferentiator::new(dt, cfg.diff)?,
            d_v: AlgebraicDifferentiator::new(dt, cfg.diff)?,
            d_w: AlgebraicDifferentiator::new(dt, cfg.w_diff)?,
            history: VecDeque::new(),
            history_cap: cfg.w_diff.samples(dt) + 4,
            valid: VecDeque::with_capacity(cfg.median_window),
            published: None,
            counts: RejectionCounts::default(),
            streak: 0,
            next_update: None,
            cfg,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn published(&self) -> Option<Published> {
        self.published
    }

    pub fn state(&self) -> EstimatorState {
        EstimatorState {
            published: self.published,
            counts: self.counts.clone(),
            streak: self.streak,
            eps_rho_dot: self.cfg.eps_rho_dot,
            eps_w: self.cfg.eps_w,
            median_window: self.cfg.median_window,
        }
    }

    fn is_update(&mut self, t: f64) -> bool {
        let half = 0.5 * self.cfg.sample_period_s;
        let due = self.next_update.is_none_or(|n| t >= n - half);
        if due {
            self.next_update = Some(t + self.cfg.update_period_s);
        }
        due
    }

    /// Feeds one detector sample (`t` in s, density in veh/km/lane, speed
    /// in km/h). A gap in `t` longer than the differentiators bridge
    /// restarts them.
    pub fn push(&mut self, t: f64, rho: f64, v: f64) -> Result<EstimateRow> {
        let mut row = EstimateRow {
            t,
            t_ref: None,
            rho_ref: None,
            rho_dot_ref: None,
            w_ref: None,
            a_raw: None,
            published: None,
            rejected: None,
        };
        let first = self.first_stage(t, rho, v)?;
        if !self.is_update(t) {
            row.published = self.published;
            return Ok(row);
        }
        let outcome = first.and_then(|ew| self.second_stage(&ew, &mut row));
        self.counts.samples += 1;
        match outcome {
            Ok(()) => {
                self.counts.accepted += 1;
                self.streak = 0;
            }
            Err(reason) => {
                *self.counts.by_reason.entry(reason).or_insert(0) += 1;
                self.streak += 1;
                row.rejected = Some(
                    if reason != Rejection::Warmup && self.streak >= self.cfg.uninformative_after {
                        Rejection::Uninformative
                    } else {
                        reason
                    },
                );
            }
        }
        row.published = self.published;
        Ok(row)
    }

    /// Differentiates `ρ` and `V`, forms `W` and differentiates it.
    fn first_stage(
        &mut self,
        t: f64,
        rho: f64,
        v: f64,
    ) -> Result<std::result::Result<DerivativeEstimate, Rejection>> {
        let er = self.d_rho.push(t, rho)?;
        let ev = self.d_v.push(t, v)?;
        let (Some(er), Some(ev)) = (er, ev) else {
            return Ok(Err(Rejection::Warmup));
        };
        let s = Smoothed { t: er.t_ref, rho: er.value, rho_dot: er.d1 * SECS_PER_HOUR, v: ev.value };
        if self.history.back().is_some_and(|h| s.t - h.t > 1.5 * self.cfg.sample_period_s) {
            self.history.clear();
        }
        if self.history.len() == self.history_cap {
            self.history.pop_front();
        }
        self.history.push_back(s);

        let w = chain_rule_derivative(ev.d1 * SECS_PER_HOUR, s.rho_dot, self.cfg.eps_rho_dot)
            .and_then(|v_rho| log_derivative(s.v, v_rho));
        let w = match w {
            Ok(w) => w,
            Err(r) => return Ok(Err(r)),
        };
        let Some(ew) = self.d_w.push(s.t, w)? else {
            return Ok(Err(Rejection::Warmup));
        };
        Ok(Ok(ew))
    }

    /// Per-sample algebra at the reference time of the `W` derivative.
    fn second_stage(
        &mut self,
        ew: &DerivativeEstimate,
        row: &mut EstimateRow,
    ) -> std::result::Result<(), Rejection> {
        let s = self.interpolate(ew.t_ref).ok_or(Rejection::Degenerate)?;
        let w = ew.value;
        row.t_ref = Some(s.t);
        row.rho_ref = Some(s.rho);
        row.rho_dot_ref = Some(s.rho_dot);
        row.w_ref = Some(w);
        if !(w < 0.0) {
            return Err(Rejection::WNonNegative);
        }
        let w_rho = chain_rule_derivative(ew.d1 * SECS_PER_HOUR, s.rho_dot, self.cfg.eps_rho_dot)?;
        let a = estimate_a(s.rho, w, w_rho, self.cfg.eps_w, (self.cfg.a_min, self.cfg.a_max))?;
        row.a_raw = Some(a);
        estimate_k(s.rho, w, a)?;
        if !(s.v > 0.0) {
            return Err(Rejection::NonPositiveSpeed);
        }
        if self.valid.len() == self.cfg.median_window {
            self.valid.pop_front();
        }
        self.valid.push_back(Valid { rho: s.rho, w, v: s.v, a });
        self.republish();
        Ok(())
    }

    fn interpolate(&self, t: f64) -> Option<Smoothed> {
        let h = &self.history;
        let j = h.iter().position(|s| s.t >= t)?;
        if (h[j].t - t).abs() < 1e-9 {
            return Some(Smoothed { t, ..h[j] });
        }
        if j == 0 {
            return None;
        }
        let (p, q) = (h[j - 1], h[j]);
        let f = (t - p.t) / (q.t - p.t);
        let lerp = |x: f64, y: f64| x + f * (y - x);
        Some(Smoothed {
            t,
            rho: lerp(p.rho, q.rho),
            rho_dot: lerp(p.rho_dot, q.rho_dot),
            v: lerp(p.v, q.v),
        })
    }

    /// Median `a`, then `K` and `v_f` re-derived from every buffered
    /// sample at that `a` so the published set is self-consistent.
    fn republish(&mut self) {
        let mut a: Vec<f64> = self.valid.iter().map(|s| s.a).collect();
        let a = median(&mut a);
        let mut ks: Vec<f64> =
            self.valid.iter().filter_map(|s| estimate_k(s.rho, s.w, a).ok()).collect();
        if ks.is_empty() {
            return;
        }
        let k = median(&mut ks);
        let mut vfs: Vec<f64> = self.valid.iter().map(|s| estimate_vf(s.v, s.rho, k, a)).collect();
        let v_f = median(&mut vfs);
        let rho_c = estimate_rho_c(k, a);
        if rho_c.is_finite() && rho_c > 0.0 && v_f.is_finite() && v_f > 0.0 {
            self.published = Some(Published { a, k, rho_c, v_f });
        }
    }
}

/// Runs an estimator over `(t_s, density, speed)` samples.
pub fn run_estimator(
    samples: &[(f64, f64, f64)],
    cfg: EstimatorConfig,
) -> Result<(Vec<EstimateRow>, EstimatorState)> {
    let mut est = FdEstimator::new(cfg)?;
    let rows = samples
        .iter()
        .map(|&(t, rho, v)| est.push(t, rho, v))
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, est.state()))
}

/// Writes `t, a_raw, a_pub, K_pub, rho_c_pub, v_f_pub, rejected_flag,
/// reject_reason`; absent values are empty fields.
pub fn write_estimates_csv<W: Write>(rows: &[EstimateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "a_raw", "a_pub", "K_pub", "rho_c_pub", "v_f_pub", "rejected_flag", "reject_reason"])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let p = r.published;
        w.write_record([
            r.t.to_string(),
            opt(r.a_raw),
            opt(p.map(|p| p.a)),
            opt(p.map(|p| p.k)),
            opt(p.map(|p| p.rho_c)),
            opt(p.map(|p| p.v_f)),
            u8::from(r.rejected.is_some()).to_string(),
            r.rejected.map(|x| x.as_str().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
    Ok(())
}

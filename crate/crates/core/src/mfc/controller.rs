use serde::{Deserialize, Serialize};

use super::{
    estimate_f_from_derivative, estimate_f_integral, ipi_control, DerivativeMethod, FSample,
    FWindow, IpiGains, OutputDerivative, ReferenceConfig, ReferenceGenerator, UltraLocalModel,
};
use crate::error::Result;
use crate::secs_to_hours;
use crate::traffic::RampParams;

/// Tuning of the ramp-metering iPI controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Input gain; `None` derives `Q_sat / (L λ)` of the merge segment.
    pub alpha: Option<f64>,
    /// Proportional gain (1/h).
    pub kp: f64,
    /// Integral gain (1/h²).
    pub ki: f64,
    /// Freeze `∫e` while the control saturates.
    pub anti_windup: bool,
    pub reference: ReferenceConfig,
    pub derivative: DerivativeMethod,
    /// Horizon of the integral `F` estimate reported alongside (s).
    pub f_window_s: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            kp: 40.0,
            ki: 400.0,
            anti_windup: true,
            reference: ReferenceConfig::default(),
            derivative: DerivativeMethod::default(),
            f_window_s: 120.0,
        }
    }
}

/// Result of one loop update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopOutput {
    pub e: f64,
    pub u_raw: f64,
    pub u: f64,
    pub saturated: bool,
}

/// Sampled iPI loop around the ultra-local model, independent of what the
/// output physically is.
#[derive(Debug, Clone)]
pub struct IpiLoop {
    model: UltraLocalModel,
    gains: IpiGains,
    bounds: (f64, f64),
    period_h: f64,
    anti_windup: bool,
    u_prev: f64,
    f_window: FWindow,
}

impl IpiLoop {
    /// `bounds` may be infinite for an unconstrained loop. `u0` is the
    /// control assumed applied before the first update.
    pub fn new(
        alpha: f64,
        gains: IpiGains,
        bounds: (f64, f64),
        period_h: f64,
        u0: f64,
        f_window_h: f64,
    ) -> Result<Self> {
        Ok(Self {
            model: UltraLocalModel::new(alpha)?,
            gains,
            bounds,
            period_h,
            anti_windup: true,
            u_prev: u0,
            f_window: FWindow::new(f_window_h.max(period_h), period_h)?,
        })
    }

    pub fn with_anti_windup(mut self, on: bool) -> Self {
        self.anti_windup = on;
        self
    }

    pub fn model(&self) -> &UltraLocalModel {
        &self.model
    }

    pub fn gains(&self) -> &IpiGains {
        &self.gains
    }

    pub fn u_prev(&self) -> f64 {
        self.u_prev
    }

    /// Updates `[F]_e` from a derivative estimate of the output and the
    /// control applied over the last period.
    pub fn estimate_f(&mut self, y_dot: f64) -> f64 {
        self.model.f_est = estimate_f_from_derivative(y_dot, self.model.alpha, self.u_prev);
        self.model.f_est
    }

    /// Overrides `[F]_e`, e.g. with the true `F` of a synthetic plant.
    pub fn set_f_estimate(&mut self, f: f64) {
        self.model.f_est = f;
    }

    /// Integral estimate of `F` over the monitor window, once it is full.
    pub fn f_integral(&self) -> Option<f64> {
        estimate_f_integral(&self.f_window, self.model.alpha, &self.gains).ok()
    }

    pub fn step(&mut self, y: f64, y_star: f64, y_star_dot: f64) -> LoopOutput {
        let e = y - y_star;
        let candidate = IpiGains { integral: self.gains.integral + e * self.period_h, ..self.gains };
        let u_raw = ipi_control(&self.model, y_star_dot, e, &candidate);
        let u = u_raw.clamp(self.bounds.0, self.bounds.1);
        let saturated = u != u_raw;
        if !(self.anti_windup && saturated) {
            self.gains.integral = candidate.integral;
        }
        self.f_window.push(FSample { u, y_star_dot, e, integral: self.gains.integral });
        self.u_prev = u;
        LoopOutput { e, u_raw, u, saturated }
    }
}

/// Per-period controller trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlRecord {
    pub t_h: f64,
    pub rho_s: f64,
    pub v_filtered: f64,
    pub rho_star: f64,
    pub e: f64,
    pub f_est: f64,
    /// Integral estimate of `F`, once its window is full.
    pub f_integral: Option<f64>,
    pub r_raw: f64,
    pub r: f64,
}

/// Ramp-metering controller: reference generation, `ρ̇_s` estimation and
/// the iPI loop, advanced once per control period.
#[derive(Debug, Clone)]
pub struct RampController {
    inner: IpiLoop,
    derivative: OutputDerivative,
    reference: ReferenceGenerator,
}

impl RampController {
    /// `alpha` is used when the configuration leaves it unset.
    pub fn new(cfg: &ControllerConfig, ramp: &RampParams, alpha: f64) -> Result<Self> {
        ramp.validate()?;
        let period_h = ramp.control_period_h();
        let inner = IpiLoop::new(
            cfg.alpha.unwrap_or(alpha),
            IpiGains::new(cfg.kp, cfg.ki)?,
            (ramp.r_min, ramp.r_max),
            period_h,
            ramp.r_max,
            secs_to_hours(cfg.f_window_s),
        )?
        .with_anti_windup(cfg.anti_windup);
        Ok(Self {
            inner,
            derivative: OutputDerivative::new(cfg.derivative, period_h)?,
            reference: ReferenceGenerator::new(cfg.reference)?,
        })
    }

    pub fn ipi(&self) -> &IpiLoop {
        &self.inner
    }

    /// Consumes measured density and speed of the metered segment and
    /// returns the metering rate for the next period.
    pub fn update(&mut self, t_h: f64, rho_s: f64, v_s: f64) -> Result<ControlRecord> {
        let (rho_star, v_filtered) = self.reference.update(v_s);
        let out = match self.derivative.push(rho_s)? {
            Some(rho_dot) => {
                self.inner.estimate_f(rho_dot);
                // The reference is piecewise constant: its derivative is zero
                // between switches.
                self.inner.step(rho_s, rho_star, 0.0)
            }
            None => {
                let u = self.inner.u_prev();
                LoopOutput { e: rho_s - rho_star, u_raw: u, u, saturated: false }
            }
        };
        Ok(ControlRecord {
            t_h,
            rho_s,
            v_filtered,
            rho_star,
            e: out.e,
            f_est: self.inner.model().f_est,
            f_integral: self.inner.f_integral(),
            r_raw: out.u_raw,
            r: out.u,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anti_windup_freezes_integral_when_saturated() {
        let g = IpiGains::new(20.0, 100.0).unwrap();
        let mut lp = IpiLoop::new(100.0, g, (0.0, 1.0), 1.0 / 180.0, 1.0, 0.1).unwrap();
        // Density far below target: control wants > 1.
        let out = lp.step(5.0, 30.0, 0.0);
        assert!(out.saturated && out.u == 1.0);
        assert_eq!(lp.gains().integral, 0.0);

        let mut free = IpiLoop::new(100.0, g, (0.0, 1.0), 1.0 / 180.0, 1.0, 0.1)
            .unwrap()
            .with_anti_windup(false);
        free.step(5.0, 30.0, 0.0);
        assert!((free.gains().integral + 25.0 / 180.0).abs() < 1e-12);
    }

    #[test]
    fn holds_initial_control_while_warming_up() {
        let ramp = RampParams::default();
        let mut c = RampController::new(&ControllerConfig::default(), &ramp, 1800.0).unwrap();
        let rec = c.update(0.0, 40.0, 50.0).unwrap();
        assert_eq!(rec.r, 1.0);
        let rec = c.update(1.0 / 180.0, 41.0, 50.0).unwrap();
        assert!(rec.r < 1.0, "dense and slow traffic should start metering");
    }

    #[test]
    fn f_estimate_uses_previous_control() {
        let g = IpiGains::new(1.0, 0.0).unwrap();
        let mut lp = IpiLoop::new(50.0, g, (0.0, 1.0), 0.01, 0.4, 0.02).unwrap();
        assert_eq!(lp.estimate_f(0.0), -20.0);
    }
}

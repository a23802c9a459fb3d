//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use rampmeter::harness::Scenario;
use rampmeter::mfc::{ControllerConfig, IpiGains, IpiLoop, OutputDerivative};
use rampmeter::traffic::BoundaryInput;

/// Closed-form solution of `ë + kp ė + ki e = 0` with `e(0) = e0`,
/// `ė(0) = −kp e0` (integral state zero at the step).
pub fn analytic_error(kp: f64, ki: f64, e0: f64, t: f64) -> f64 {
    let de0 = -kp * e0;
    let sigma = kp / 2.0;
    let disc = sigma * sigma - ki;
    if disc.abs() < 1e-12 {
        (e0 + (de0 + sigma * e0) * t) * (-sigma * t).exp()
    } else if disc < 0.0 {
        let w = (-disc).sqrt();
        (-sigma * t).exp() * (e0 * (w * t).cos() + (de0 + sigma * e0) / w * (w * t).sin())
    } else {
        let r = disc.sqrt();
        let (s1, s2) = (-sigma + r, -sigma - r);
        let c2 = (de0 - s1 * e0) / (s2 - s1);
        (e0 - c2) * (s1 * t).exp() + c2 * (s2 * t).exp()
    }
}

/// `∫ F dt` for the synthetic plant `ẏ = F(t) + α u`, with
/// `F(t) = 40 + 30 sin(2πt / 1.5 h)` (units per hour).
pub fn drift_integral(t0: f64, t1: f64) -> f64 {
    let prim = |t: f64| 40.0 * t - 30.0 * 1.5 / TAU * (TAU * t / 1.5).cos();
    prim(t1) - prim(t0)
}

/// Largest deviation, relative to the step size, between the loop's error
/// after a reference step and the analytic law, with the true drift (its
/// mean over each period) injected as `[F]_e`.
pub fn exact_f_envelope(kp: f64, ki: f64, period_s: f64) -> f64 {
    let dt = period_s / 3600.0;
    let alpha = 100.0;
    let gains = IpiGains::new(kp, ki).unwrap();
    let mut lp = IpiLoop::new(alpha, gains, (f64::NEG_INFINITY, f64::INFINITY), dt, 0.0, dt).unwrap();
    let (t_step, y0, y1) = (0.2, 20.0, 25.0);
    let mut y = y0;
    let mut worst: f64 = 0.0;
    for k in 0..(0.8 / dt).round() as usize {
        let t = k as f64 * dt;
        let after = t >= t_step - 1e-12;
        lp.set_f_estimate(drift_integral(t, t + dt) / dt);
        let out = lp.step(y, if after { y1 } else { y0 }, 0.0);
        let want = if after { analytic_error(kp, ki, y0 - y1, t - t_step) } else { 0.0 };
        worst = worst.max((out.e - want).abs() / (y1 - y0).abs());
        y += drift_integral(t, t + dt) + alpha * out.u * dt;
    }
    worst
}

/// Time (h) after `t_step` from which `|e| < 0.5` holds to the end of the
/// trace; `None` if it never does.
pub fn settling_time(trace: &[(f64, f64)], t_step: f64) -> Option<f64> {
    let last_bad = trace.iter().filter(|(t, e)| *t >= t_step && e.abs() >= 0.5).map(|p| p.0).next_back();
    match last_bad {
        None => Some(0.0),
        Some(t) if t < trace.last()?.0 => Some(t - t_step),
        Some(_) => None,
    }
}

/// Synthetic plant under the default controller with estimated `F`;
/// reference steps 28 → 32 at 0.5 h. Returns the `(t, e)` trace.
pub fn synthetic_plant_trace() -> Vec<(f64, f64)> {
    let period_h = 20.0 / 3600.0;
    let alpha = 100.0;
    let cfg = ControllerConfig::default();
    let gains = IpiGains::new(cfg.kp, cfg.ki).unwrap();
    let mut lp = IpiLoop::new(alpha, gains, (-10.0, 10.0), period_h, 0.0, 120.0 / 3600.0).unwrap();
    let mut deriv = OutputDerivative::new(cfg.derivative, period_h).unwrap();
    let mut y = 28.0;
    let mut trace = Vec::new();
    for k in 0..(1.5 / period_h) as usize {
        let t = k as f64 * period_h;
        if let Some(dy) = deriv.push(y).unwrap() {
            lp.estimate_f(dy);
        }
        let out = lp.step(y, if t < 0.5 { 28.0 } else { 32.0 }, 0.0);
        trace.push((t, out.e));
        y += drift_integral(t, t + period_h) + alpha * out.u * period_h;
    }
    trace
}

/// Surge-scenario freeway at constant demand (3800 + 900 veh/h) under the
/// default controller; the metered-segment reference steps 28 → 32 at 1 h.
pub fn freeway_trace() -> Vec<(f64, f64)> {
    let sc = Scenario::surge();
    let fw = sc.freeway().unwrap();
    let m = fw.merge_index;
    let last = fw.segments.len() - 1;
    let dt_h = sc.sim_step_s / 3600.0;
    let period_h = sc.ramp.control_period_h();
    let per = sc.steps_per_control();
    let cfg = &sc.controller.ipi;
    let mut lp = IpiLoop::new(
        sc.default_alpha(),
        IpiGains::new(cfg.kp, cfg.ki).unwrap(),
        (sc.ramp.r_min, sc.ramp.r_max),
        period_h,
        sc.ramp.r_max,
        cfg.f_window_s / 3600.0,
    )
    .unwrap();
    let mut deriv = OutputDerivative::new(cfg.derivative, period_h).unwrap();
    let input = BoundaryInput { upstream_demand: 3800.0, ramp_demand: 900.0, downstream_density: 0.0 };
    let mut state = fw.equilibrium_state(input.upstream_demand, 300.0);
    let mut trace = Vec::new();
    let mut r = sc.ramp.r_max;
    for k in 0..(2.0 / dt_h) as usize {
        let t = k as f64 * dt_h;
        if k % per == 0 {
            let rho = state.rho[m];
            if let Some(dy) = deriv.push(rho).unwrap() {
                lp.estimate_f(dy);
                let out = lp.step(rho, if t < 1.0 { 28.0 } else { 32.0 }, 0.0);
                r = out.u;
                trace.push((t, out.e));
            }
        }
        let bc = BoundaryInput { downstream_density: state.rho[last], ..input };
        state = fw.step(&state, &bc, r, dt_h).unwrap().0;
    }
    trace
}

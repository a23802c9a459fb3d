use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{compute_metrics, AlineaController, ControllerKind, RunMetrics, Scenario};
use crate::error::Result;
use crate::mfc::{ControlRecord, RampController};
use crate::secs_to_hours;
use crate::traffic::{BoundaryInput, FreewayState};

/// State, inputs and control at the start of one simulation step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRow {
    pub t_h: f64,
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
    pub w: f64,
    pub w_origin: f64,
    pub upstream_demand: f64,
    pub ramp_demand: f64,
    /// Measured (possibly noisy) density and speed of the metered segment at
    /// the last control instant.
    pub rho_meas: f64,
    pub v_meas: f64,
    pub r: f64,
    pub r_raw: f64,
    pub rho_star: Option<f64>,
    pub e: Option<f64>,
    pub f_est: Option<f64>,
    pub f_integral: Option<f64>,
    pub v_filtered: Option<f64>,
    /// Flows realised over the step (veh/h).
    pub inflow: f64,
    pub ramp_flow: f64,
    pub outflow: f64,
    pub clamped_vehicles: f64,
}

/// Per-step record of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dt_h: f64,
    pub rows: Vec<TrajectoryRow>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.rows.first().map_or(0, |r| r.rho.len());
        let mut header: Vec<String> = vec!["t_h".into()];
        header.extend((0..n).map(|i| format!("rho_{i}")));
        header.extend((0..n).map(|i| format!("v_{i}")));
        header.extend(
            [
                "w", "w_origin", "upstream_demand", "ramp_demand", "rho_meas", "v_meas", "r",
                "r_raw", "rho_star", "e", "f_est", "f_integral", "v_filtered", "inflow",
                "ramp_flow", "outflow", "clamped_vehicles",
            ]
            .map(String::from),
        );
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = vec![row.t_h.to_string()];
            rec.extend(row.rho.iter().map(f64::to_string));
            rec.extend(row.v.iter().map(f64::to_string));
            rec.extend([
                row.w.to_string(),
                row.w_origin.to_string(),
                row.upstream_demand.to_string(),
                row.ramp_demand.to_string(),
                row.rho_meas.to_string(),
                row.v_meas.to_string(),
                row.r.to_string(),
                row.r_raw.to_string(),
                opt(row.rho_star),
                opt(row.e),
                opt(row.f_est),
                opt(row.f_integral),
                opt(row.v_filtered),
                row.inflow.to_string(),
                row.ramp_flow.to_string(),
                row.outflow.to_string(),
                row.clamped_vehicles.to_string(),
            ]);
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| crate::Error::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub controls: Vec<ControlRecord>,
    pub final_state: FreewayState,
    pub metrics: RunMetrics,
    /// Largest per-step vehicle-balance error, relative to vehicles present.
    pub max_balance_residual: f64,
    /// Signed sum of per-step balance errors (veh).
    pub cumulative_drift: f64,
    pub clamp_events: u32,
}

enum Control {
    Open(f64),
    Ipi(Box<RampController>),
    Alinea(AlineaController),
}

/// Runs a scenario to completion. Deterministic for a given scenario,
/// including its seed.
pub fn run(sc: &Scenario) -> Result<RunOutput> {
    sc.validate()?;
    let fw = sc.freeway()?;
    let dt_h = secs_to_hours(sc.sim_step_s);
    let steps = (sc.duration_h / dt_h).round() as usize;
    let per_control = sc.steps_per_control();
    let m = fw.merge_index;
    let last = fw.segments.len() - 1;

    let mut control = match sc.controller.kind {
        ControllerKind::None => Control::Open(sc.ramp.r_max),
        ControllerKind::Ipi | ControllerKind::Ip => {
            let mut cfg = sc.controller.ipi;
            if sc.controller.kind == ControllerKind::Ip {
                cfg.ki = 0.0;
            }
            Control::Ipi(Box::new(RampController::new(&cfg, &sc.ramp, sc.default_alpha())?))
        }
        ControllerKind::Alinea => {
            let a = &sc.controller.alinea;
            Control::Alinea(AlineaController::new(
                sc.ramp,
                a.target.unwrap_or(sc.diagram.rho_c),
                a.gain,
            ))
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut gauss = |sigma: f64| -> f64 {
        if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        } else {
            0.0
        }
    };

    let mut state = fw.equilibrium_state(sc.demand.mainline.at(0.0), sc.demand.ramp.at(0.0));
    let mut rows = Vec::with_capacity(steps);
    let mut controls = Vec::new();
    let mut r = sc.ramp.r_max;
    let mut r_raw = r;
    let mut last_record: Option<ControlRecord> = None;
    let (mut rho_meas, mut v_meas) = (state.rho[m], state.v[m]);
    let mut max_residual: f64 = 0.0;
    let mut drift = 0.0;
    let mut clamp_events = 0;

    for k in 0..steps {
        let t_h = k as f64 * dt_h;
        if k % per_control == 0 {
            rho_meas = (state.rho[m] + gauss(sc.noise.density_sigma)).max(0.0);
            v_meas = (state.v[m] * (1.0 + gauss(sc.noise.speed_sigma))).max(0.0);
            match &mut control {
                Control::Open(r_open) => {
                    r = *r_open;
                    r_raw = r;
                }
                Control::Ipi(c) => {
                    let rec = c.update(t_h, rho_meas, v_meas)?;
                    r = rec.r;
                    r_raw = rec.r_raw;
                    controls.push(rec);
                    last_record = Some(rec);
                }
                Control::Alinea(c) => {
                    r = c.update(rho_meas);
                    r_raw = r;
                }
            }
        }

        let input = BoundaryInput {
            upstream_demand: sc.demand.mainline.at(t_h),
            ramp_demand: sc.demand.ramp.at(t_h),
            downstream_density: sc
                .demand
                .downstream_density
                .as_ref()
                .map_or(state.rho[last], |p| p.at(t_h)),
        };
        let (next, report) = fw.step(&state, &input, r, dt_h)?;

        let before = state.total_vehicles(&fw.segments);
        let after = next.total_vehicles(&fw.segments);
        let expected = dt_h * (input.upstream_demand + input.ramp_demand - report.outflow)
            - report.clamped_vehicles;
        let err = (after - before) - expected;
        drift += err;
        max_residual = max_residual.max(err.abs() / before.max(after).max(1.0));
        clamp_events += report.density_clamps + report.speed_clamps;

        rows.push(TrajectoryRow {
            t_h,
            rho: state.rho.clone(),
            v: state.v.clone(),
            w: state.w,
            w_origin: state.w_origin,
            upstream_demand: input.upstream_demand,
            ramp_demand: input.ramp_demand,
            rho_meas,
            v_meas,
            r,
            r_raw,
            rho_star: last_record.map(|c| c.rho_star),
            e: last_record.map(|c| c.e),
            f_est: last_record.map(|c| c.f_est),
            f_integral: last_record.and_then(|c| c.f_integral),
            v_filtered: last_record.map(|c| c.v_filtered),
            inflow: report.inflow,
            ramp_flow: report.ramp_flow,
            outflow: report.outflow,
            clamped_vehicles: report.clamped_vehicles,
        });
        state = next;
    }

    let trajectory = Trajectory { dt_h, rows };
    let lane_km: Vec<f64> = fw.segments.iter().map(|s| s.lane_km()).collect();
    let metrics = compute_metrics(&trajectory, &lane_km, m, sc.diagram.rho_c);
    Ok(RunOutput {
        trajectory,
        controls,
        final_state: state,
        metrics,
        max_balance_residual: max_residual,
        cumulative_drift: drift,
        clamp_events,
    })
}

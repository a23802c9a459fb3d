use serde::{Deserialize, Serialize};

use super::{ramp_flow, supply_ratio, FundamentalDiagram, RampParams, SupplyFormula};
use crate::error::{invalid, Error, Result};
use crate::secs_to_hours;

/// Geometry and METANET coefficients of one freeway segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentParams {
    pub length_km: f64,
    pub lanes: u32,
    /// Speed relaxation time (s).
    pub tau_s: f64,
    /// Anticipation coefficient (km²/h).
    pub nu_anticip: f64,
    /// Density offset in the anticipation term (veh/km/lane).
    pub kappa: f64,
    /// Jam density (veh/km/lane).
    pub rho_max: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            length_km: 0.5,
            lanes: 2,
            tau_s: 18.0,
            nu_anticip: 60.0,
            kappa: 40.0,
            rho_max: 180.0,
        }
    }
}

impl SegmentParams {
    pub fn validate(&self, fd: &FundamentalDiagram) -> Result<()> {
        let positive = [self.length_km, self.tau_s, self.nu_anticip, self.kappa, self.rho_max];
        if positive.iter().any(|x| !(*x > 0.0)) || self.lanes == 0 {
            return Err(invalid(format!("segment parameters must be > 0: {self:?}")));
        }
        if self.rho_max <= fd.rho_c {
            return Err(invalid(format!(
                "rho_max {} must exceed rho_c {}",
                self.rho_max, fd.rho_c
            )));
        }
        Ok(())
    }

    /// Lane-kilometres; multiplies a density to give vehicles.
    #[inline]
    pub fn lane_km(&self) -> f64 {
        self.length_km * f64::from(self.lanes)
    }
}

/// Evolving simulator state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreewayState {
    /// Density per segment (veh/km/lane).
    pub rho: Vec<f64>,
    /// Mean speed per segment (km/h).
    pub v: Vec<f64>,
    /// On-ramp queue (veh).
    pub w: f64,
    /// Queue at the upstream mainline origin (veh).
    pub w_origin: f64,
    /// Simulation clock (h).
    pub t_h: f64,
}

impl FreewayState {
    /// Vehicles on the mainline.
    pub fn mainline_vehicles(&self, segments: &[SegmentParams]) -> f64 {
        self.rho.iter().zip(segments).map(|(r, s)| r * s.lane_km()).sum()
    }

    /// Vehicles on the mainline plus both queues.
    pub fn total_vehicles(&self, segments: &[SegmentParams]) -> f64 {
        self.mainline_vehicles(segments) + self.w + self.w_origin
    }
}

/// Exogenous inputs over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryInput {
    /// Mainline demand at the origin (veh/h).
    pub upstream_demand: f64,
    /// On-ramp demand `d` (veh/h).
    pub ramp_demand: f64,
    /// Density of the ghost segment past the last one (veh/km/lane).
    pub downstream_density: f64,
}

/// Flows realised during one step and any clamping that happened.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// Flow leaving the origin queue into segment 0 (veh/h).
    pub inflow: f64,
    /// Flow admitted from the on-ramp (veh/h).
    pub ramp_flow: f64,
    /// Flow leaving the last segment (veh/h).
    pub outflow: f64,
    /// Vehicles removed (positive) or added (negative) by density clamping.
    pub clamped_vehicles: f64,
    pub density_clamps: u32,
    pub speed_clamps: u32,
}

/// A freeway stretch with one metered on-ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct Freeway {
    pub segments: Vec<SegmentParams>,
    pub ramp: RampParams,
    pub fd: FundamentalDiagram,
    /// Segment receiving the on-ramp.
    pub merge_index: usize,
    /// Optional METANET merging coefficient δ (0 disables the term).
    pub merge_coefficient: f64,
    /// Largest excursion outside `[0, ρ_max]` that is clamped silently
    /// (veh/km/lane); larger ones abort as unstable.
    pub clamp_tolerance: f64,
}

impl Freeway {
    pub fn new(
        segments: Vec<SegmentParams>,
        ramp: RampParams,
        fd: FundamentalDiagram,
        merge_index: usize,
    ) -> Result<Self> {
        let fw = Self {
            segments,
            ramp,
            fd,
            merge_index,
            merge_coefficient: 0.0,
            clamp_tolerance: 0.5,
        };
        fw.validate()?;
        Ok(fw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(invalid("freeway needs at least one segment"));
        }
        if self.merge_index >= self.segments.len() {
            return Err(invalid(format!(
                "merge index {} out of range for {} segments",
                self.merge_index,
                self.segments.len()
            )));
        }
        self.fd.validate()?;
        self.ramp.validate()?;
        for s in &self.segments {
            s.validate(&self.fd)?;
        }
        if !(self.merge_coefficient >= 0.0 && self.clamp_tolerance >= 0.0) {
            return Err(invalid("merge coefficient and clamp tolerance must be >= 0"));
        }
        Ok(())
    }

    /// Uniform free-flow state carrying `upstream` veh/h before the merge and
    /// `upstream + ramp` after it, with empty queues. Segments whose flow
    /// exceeds capacity start at the critical density.
    pub fn equilibrium_state(&self, upstream: f64, ramp: f64) -> FreewayState {
        let (rho, v) = self
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let flow = if i >= self.merge_index { upstream + ramp } else { upstream };
                let rho = self
                    .fd
                    .free_flow_density(flow / f64::from(s.lanes))
                    .unwrap_or(self.fd.rho_c);
                (rho, self.fd.speed(rho))
            })
            .unzip();
        FreewayState { rho, v, w: 0.0, w_origin: 0.0, t_h: 0.0 }
    }

    /// Advances the state by `dt_h` hours with ramp control `r` held constant.
    pub fn step(
        &self,
        state: &FreewayState,
        input: &BoundaryInput,
        r: f64,
        dt_h: f64,
    ) -> Result<(FreewayState, StepReport)> {
        let n = self.segments.len();
        if state.rho.len() != n || state.v.len() != n {
            return Err(invalid("state size does not match segment count"));
        }
        if !(dt_h > 0.0) || dt_h > self.ramp.control_period_h() * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "time step {dt_h} h must be in (0, control period]"
            )));
        }
        if !(input.upstream_demand >= 0.0
            && input.ramp_demand >= 0.0
            && input.downstream_density >= 0.0)
        {
            return Err(invalid("boundary inputs must be >= 0"));
        }

        let fd = &self.fd;
        let segs = &self.segments;
        let m = self.merge_index;

        let q: Vec<f64> = (0..n)
            .map(|i| f64::from(segs[i].lanes) * state.rho[i] * state.v[i])
            .collect();

        // Origin queue feeds segment 0 like an unmetered ramp.
        let first = &segs[0];
        let origin_capacity = f64::from(first.lanes) * fd.capacity_per_lane();
        let origin_supply =
            supply_ratio(SupplyFormula::Metanet, state.rho[0], fd.rho_c, first.rho_max);
        let inflow = (input.upstream_demand + state.w_origin / dt_h)
            .min(origin_capacity * origin_supply);
        let w_origin = (state.w_origin + dt_h * (input.upstream_demand - inflow)).max(0.0);

        let q_r = ramp_flow(
            r,
            input.ramp_demand,
            state.w,
            state.rho[m],
            &self.ramp,
            fd,
            segs[m].rho_max,
        )?
        .min(input.ramp_demand + state.w / dt_h);
        let w = (state.w + dt_h * (input.ramp_demand - q_r)).max(0.0);

        let mut report = StepReport {
            inflow,
            ramp_flow: q_r,
            outflow: q[n - 1],
            ..StepReport::default()
        };

        let mut rho = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let s = &segs[i];
            let (rho_i, v_i) = (state.rho[i], state.v[i]);
            let upstream_flow = if i == 0 { inflow } else { q[i - 1] };
            let on_ramp = if i == m { q_r } else { 0.0 };

            let mut next_rho = rho_i + dt_h / s.lane_km() * (upstream_flow - q[i] + on_ramp);
            if next_rho < 0.0 || next_rho > s.rho_max {
                let bound = next_rho.clamp(0.0, s.rho_max);
                if (next_rho - bound).abs() > self.clamp_tolerance {
                    return Err(Error::Instability {
                        t_h: state.t_h,
                        detail: format!(
                            "density {next_rho:.3} in segment {i} outside [0, {}]",
                            s.rho_max
                        ),
                    });
                }
                report.clamped_vehicles += (next_rho - bound) * s.lane_km();
                report.density_clamps += 1;
                next_rho = bound;
            }

            let tau_h = secs_to_hours(s.tau_s);
            let v_up = if i == 0 { v_i } else { state.v[i - 1] };
            let rho_down = if i + 1 == n { input.downstream_density } else { state.rho[i + 1] };
            let mut next_v = v_i
                + dt_h / tau_h * (fd.speed(rho_i) - v_i)
                + dt_h / s.length_km * v_i * (v_up - v_i)
                - s.nu_anticip * dt_h / (tau_h * s.length_km) * (rho_down - rho_i)
                    / (rho_i + s.kappa);
            if i == m && self.merge_coefficient > 0.0 {
                next_v -= self.merge_coefficient * dt_h * q_r * v_i
                    / (s.lane_km() * (rho_i + s.kappa));
            }
            if !next_v.is_finite() {
                return Err(Error::Instability {
                    t_h: state.t_h,
                    detail: format!("non-finite speed in segment {i}"),
                });
            }
            if next_v < 0.0 || next_v > fd.v_f {
                report.speed_clamps += 1;
                next_v = next_v.clamp(0.0, fd.v_f);
            }
            rho.push(next_rho);
            v.push(next_v);
        }

        let next = FreewayState { rho, v, w, w_origin, t_h: state.t_h + dt_h };
        Ok((next, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd() -> FundamentalDiagram {
        FundamentalDiagram::new(110.0, 30.0, 2.0).unwrap()
    }

    fn freeway(n: usize) -> Freeway {
        Freeway::new(vec![SegmentParams::default(); n], RampParams::default(), fd(), n / 2)
            .unwrap()
    }

    const DT: f64 = 10.0 / 3600.0;

    fn balance_residual(fw: &Freeway, a: &FreewayState, b: &FreewayState, rep: &StepReport, input: &BoundaryInput) -> f64 {
        let before = a.total_vehicles(&fw.segments);
        let after = b.total_vehicles(&fw.segments);
        let expected = DT * (input.upstream_demand + input.ramp_demand - rep.outflow)
            - rep.clamped_vehicles;
        ((after - before) - expected).abs() / before.max(after).max(1.0)
    }

    #[test]
    fn free_flow_equilibrium_is_a_fixed_point() {
        let fw = freeway(4);
        let state = fw.equilibrium_state(2400.0, 0.0);
        let input = BoundaryInput {
            upstream_demand: 2400.0,
            ramp_demand: 0.0,
            downstream_density: state.rho[3],
        };
        let (next, _) = fw.step(&state, &input, 1.0, DT).unwrap();
        for i in 0..4 {
            assert!((next.rho[i] - state.rho[i]).abs() < 1e-9, "rho {i}");
            assert!((next.v[i] - state.v[i]).abs() < 1e-9, "v {i}");
        }
        assert_eq!(next.w, 0.0);
        assert!(next.w_origin < 1e-9);
    }

    #[test]
    fn blocked_segment_accumulates_inflow() {
        let fw = Freeway::new(vec![SegmentParams::default()], RampParams::default(), fd(), 0)
            .unwrap();
        let state = FreewayState { rho: vec![10.0], v: vec![0.0], w: 0.0, w_origin: 0.0, t_h: 0.0 };
        let input = BoundaryInput { upstream_demand: 1800.0, ramp_demand: 0.0, downstream_density: 10.0 };
        let (next, rep) = fw.step(&state, &input, 1.0, DT).unwrap();
        assert_eq!(rep.outflow, 0.0);
        assert_eq!(rep.inflow, 1800.0);
        // T·1800 / (L·λ) = (1/360)·1800 / 1 = 5
        assert!((next.rho[0] - 15.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(Freeway::new(vec![], RampParams::default(), fd(), 0).is_err());
        assert!(Freeway::new(vec![SegmentParams::default(); 2], RampParams::default(), fd(), 2).is_err());
        let low_jam = SegmentParams { rho_max: 20.0, ..SegmentParams::default() };
        assert!(Freeway::new(vec![low_jam], RampParams::default(), fd(), 0).is_err());
    }

    #[test]
    fn step_longer_than_control_period_rejected() {
        let fw = freeway(2);
        let state = fw.equilibrium_state(1000.0, 0.0);
        assert!(fw.step(&state, &BoundaryInput::default(), 1.0, 30.0 / 3600.0).is_err());
    }

    #[test]
    fn oversized_step_reports_instability() {
        let mut fw = freeway(3);
        fw.ramp.control_period_s = 600.0;
        let state = FreewayState {
            rho: vec![40.0, 40.0, 40.0],
            v: vec![100.0, 100.0, 100.0],
            w: 0.0,
            w_origin: 0.0,
            t_h: 0.0,
        };
        let input = BoundaryInput { upstream_demand: 0.0, ramp_demand: 0.0, downstream_density: 0.0 };
        let err = fw.step(&state, &input, 1.0, 60.0 / 3600.0).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }), "{err}");
    }

    proptest! {
        #[test]
        fn every_step_conserves_vehicles(
            rho in proptest::collection::vec(0.0..120.0f64, 5),
            vfrac in proptest::collection::vec(0.2..1.0f64, 5),
            w in 0.0..200.0f64, w_origin in 0.0..200.0f64,
            demand in 0.0..5000.0f64, ramp_demand in 0.0..1500.0f64,
            down in 0.0..120.0f64, r in 0.0..=1.0f64,
        ) {
            let fw = freeway(5);
            let v: Vec<f64> = vfrac.iter().zip(&rho).map(|(f, r)| f * fd().speed(*r)).collect();
            let state = FreewayState { rho, v, w, w_origin, t_h: 0.0 };
            let input = BoundaryInput { upstream_demand: demand, ramp_demand, downstream_density: down };
            let (next, rep) = fw.step(&state, &input, r, DT).unwrap();
            prop_assert!(balance_residual(&fw, &state, &next, &rep, &input) < 1e-9);
            prop_assert!(next.w >= 0.0 && next.w_origin >= 0.0);
            for i in 0..5 {
                prop_assert!(next.rho[i] >= 0.0 && next.rho[i] <= 180.0);
                prop_assert!(next.v[i] >= 0.0 && next.v[i] <= 110.0);
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use super::FundamentalDiagram;
use crate::error::{invalid, Result};
use crate::secs_to_hours;

/// Which mainline-supply term limits the on-ramp admission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupplyFormula {
    /// `(ρ_max − ρ_s) / (ρ_max − ρ_c)`, bounded and regular everywhere.
    #[default]
    Metanet,
    /// `(ρ_max − ρ_s) / (ρ_s − ρ_c)`, singular at `ρ_s = ρ_c`.
    Paper,
}

/// Densities this close to `ρ_c` are treated as unrestricted by the
/// [`SupplyFormula::Paper`] ratio.
const SUPPLY_GUARD: f64 = 1e-6;

/// On-ramp metering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampParams {
    /// On-ramp capacity (veh/h).
    pub q_sat: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Control sampling period (s).
    pub control_period_s: f64,
    #[serde(default)]
    pub supply_formula: SupplyFormula,
}

impl Default for RampParams {
    fn default() -> Self {
        Self {
            q_sat: 1800.0,
            r_min: 0.0,
            r_max: 1.0,
            control_period_s: 20.0,
            supply_formula: SupplyFormula::Metanet,
        }
    }
}

impl RampParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.r_min && self.r_min < self.r_max && self.r_max <= 1.0) {
            return Err(invalid(format!(
                "ramp bounds need 0 <= r_min < r_max <= 1 (got {}, {})",
                self.r_min, self.r_max
            )));
        }
        if !(self.q_sat > 0.0) {
            return Err(invalid("q_sat must be > 0"));
        }
        if !(self.control_period_s > 0.0) {
            return Err(invalid("control_period_s must be > 0"));
        }
        Ok(())
    }

    pub fn control_period_h(&self) -> f64 {
        secs_to_hours(self.control_period_s)
    }
}

/// Fraction of the ramp capacity the mainline can absorb at density `rho_s`,
/// clamped to `[0, 1]`.
pub fn supply_ratio(formula: SupplyFormula, rho_s: f64, rho_c: f64, rho_max: f64) -> f64 {
    let ratio = match formula {
        SupplyFormula::Metanet => (rho_max - rho_s) / (rho_max - rho_c),
        SupplyFormula::Paper => {
            if rho_s <= rho_c + SUPPLY_GUARD {
                1.0
            } else {
                (rho_max - rho_s) / (rho_s - rho_c)
            }
        }
    };
    ratio.clamp(0.0, 1.0)
}

/// Metered on-ramp flow `q_r = r·q̂_r` (veh/h), with
/// `q̂_r = min(d + w/T_s, Q_sat·min(r, supply))`.
///
/// `demand` in veh/h, `queue` in vehicles, `rho_s` is the density of the
/// segment receiving the ramp.
pub fn ramp_flow(
    r: f64,
    demand: f64,
    queue: f64,
    rho_s: f64,
    ramp: &RampParams,
    fd: &FundamentalDiagram,
    rho_max: f64,
) -> Result<f64> {
    if !(ramp.r_min..=ramp.r_max).contains(&r) {
        return Err(invalid(format!(
            "control {r} outside [{}, {}]",
            ramp.r_min, ramp.r_max
        )));
    }
    if !(demand >= 0.0 && queue >= 0.0 && rho_s >= 0.0) {
        return Err(invalid("ramp demand, queue and density must be >= 0"));
    }
    let available = demand + queue / ramp.control_period_h();
    let supply = supply_ratio(ramp.supply_formula, rho_s, fd.rho_c, rho_max);
    let q_hat = available.min(ramp.q_sat * r.min(supply));
    Ok(r * q_hat)
}

/// One explicit Euler step of the queue `ẇ = d − q_r`, clamped at zero.
/// `dt_h` in hours.
pub fn queue_step(w: f64, demand: f64, q_r: f64, dt_h: f64) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(invalid(format!("queue must be >= 0, got {w}")));
    }
    if !(dt_h > 0.0) {
        return Err(invalid(format!("time step must be > 0, got {dt_h}")));
    }
    Ok((w + dt_h * (demand - q_r)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd() -> FundamentalDiagram {
        FundamentalDiagram::new(110.0, 30.0, 2.0).unwrap()
    }

    #[test]
    fn demand_limited_in_free_flow() {
        let q = ramp_flow(1.0, 500.0, 0.0, 5.0, &RampParams::default(), &fd(), 180.0).unwrap();
        assert_eq!(q, 500.0);
    }

    #[test]
    fn closed_ramp_admits_nothing() {
        let ramp = RampParams::default();
        for &(d, w, rho) in &[(500.0, 0.0, 5.0), (1500.0, 100.0, 50.0), (0.0, 3.0, 170.0)] {
            assert_eq!(ramp_flow(0.0, d, w, rho, &ramp, &fd(), 180.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn capacity_limited_with_long_queue() {
        // d + w/T_s = 1500 + 100·180 = 19500 > Q_sat = 1800; supply ratio is 1.
        let q = ramp_flow(1.0, 1500.0, 100.0, 10.0, &RampParams::default(), &fd(), 180.0).unwrap();
        assert_eq!(q, 1800.0);
    }

    #[test]
    fn congested_mainline_restricts_admission() {
        let ramp = RampParams::default();
        let q = ramp_flow(1.0, 1500.0, 100.0, 105.0, &ramp, &fd(), 180.0).unwrap();
        assert!((q - 1800.0 * 0.5).abs() < 1e-9);
        let jammed = ramp_flow(1.0, 1500.0, 100.0, 180.0, &ramp, &fd(), 180.0).unwrap();
        assert_eq!(jammed, 0.0);
    }

    #[test]
    fn singular_ratio_is_guarded_near_critical() {
        let f = SupplyFormula::Paper;
        assert_eq!(supply_ratio(f, 30.0, 30.0, 180.0), 1.0);
        assert_eq!(supply_ratio(f, 10.0, 30.0, 180.0), 1.0);
        assert_eq!(supply_ratio(f, 30.0 + 1e-9, 30.0, 180.0), 1.0);
        // (180 - 130) / (130 - 30) = 0.5
        assert!((supply_ratio(f, 130.0, 30.0, 180.0) - 0.5).abs() < 1e-12);
        assert_eq!(supply_ratio(f, 180.0, 30.0, 180.0), 0.0);
    }

    #[test]
    fn out_of_bounds_control_rejected() {
        let ramp = RampParams { r_min: 0.1, ..RampParams::default() };
        assert!(ramp_flow(0.05, 500.0, 0.0, 5.0, &ramp, &fd(), 180.0).is_err());
        assert!(ramp_flow(1.01, 500.0, 0.0, 5.0, &ramp, &fd(), 180.0).is_err());
    }

    #[test]
    fn queue_examples() {
        assert_eq!(queue_step(0.0, 700.0, 700.0, 1.0 / 360.0).unwrap(), 0.0);
        let w = queue_step(10.0, 1000.0, 400.0, 1.0 / 360.0).unwrap();
        assert!((w - 11.666_666_666_666_666).abs() < 1e-12);
        assert_eq!(queue_step(1.0, 0.0, 1800.0, 1.0 / 360.0).unwrap(), 0.0);
        assert!(queue_step(-1.0, 0.0, 0.0, 1.0).is_err());
        assert!(queue_step(1.0, 0.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn ramp_flow_bounds_and_monotonicity(
            r1 in 0.0..=1.0f64, r2 in 0.0..=1.0f64,
            d in 0.0..3000.0f64, w in 0.0..300.0f64, rho in 0.0..180.0f64,
            alt in any::<bool>(),
        ) {
            let ramp = RampParams {
                supply_formula: if alt { SupplyFormula::Paper } else { SupplyFormula::Metanet },
                ..RampParams::default()
            };
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let q_lo = ramp_flow(lo, d, w, rho, &ramp, &fd(), 180.0).unwrap();
            let q_hi = ramp_flow(hi, d, w, rho, &ramp, &fd(), 180.0).unwrap();
            prop_assert!(q_lo >= 0.0);
            prop_assert!(q_lo <= q_hi);
            prop_assert!(q_hi <= ramp.q_sat);
            prop_assert!(q_hi <= d + w / ramp.control_period_h() + 1e-9);
        }
    }
}

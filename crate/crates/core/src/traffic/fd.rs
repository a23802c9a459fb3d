use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// May's exponential speed-density law `V(ρ) = v_f·exp(-(ρ/ρ_c)^a / a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FundamentalDiagram {
    /// Free-flow speed (km/h).
    pub v_f: f64,
    /// Critical density (veh/km/lane).
    pub rho_c: f64,
    /// Shape exponent.
    pub a: f64,
}

impl FundamentalDiagram {
    pub fn new(v_f: f64, rho_c: f64, a: f64) -> Result<Self> {
        let fd = Self { v_f, rho_c, a };
        fd.validate()?;
        Ok(fd)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_f > 0.0 && self.rho_c > 0.0 && self.a > 0.0) {
            return Err(invalid(format!(
                "fundamental diagram needs v_f, rho_c, a > 0 (got {}, {}, {})",
                self.v_f, self.rho_c, self.a
            )));
        }
        Ok(())
    }

    /// Equilibrium speed at density `rho`. Negative densities are rejected.
    pub fn equilibrium_speed(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(invalid(format!("density must be >= 0, got {rho}")));
        }
        Ok(self.speed(rho))
    }

    /// Unchecked evaluation, used on the simulator's hot path where densities
    /// are already clamped.
    #[inline]
    pub(crate) fn speed(&self, rho: f64) -> f64 {
        self.v_f * (-(rho / self.rho_c).powf(self.a) / self.a).exp()
    }

    /// `K = 1 / (a ρ_c^a)`, so that `V = v_f exp(-K ρ^a)`.
    pub fn k(&self) -> f64 {
        1.0 / (self.a * self.rho_c.powf(self.a))
    }

    /// Per-lane flow `ρ·V(ρ)` (veh/h/lane).
    pub fn flow_per_lane(&self, rho: f64) -> f64 {
        rho * self.speed(rho.max(0.0))
    }

    /// Per-lane capacity, reached at the critical density.
    pub fn capacity_per_lane(&self) -> f64 {
        self.flow_per_lane(self.rho_c)
    }

    /// Free-branch density carrying `flow_per_lane`, or `None` above capacity.
    pub fn free_flow_density(&self, flow_per_lane: f64) -> Option<f64> {
        if flow_per_lane <= 0.0 {
            return Some(0.0);
        }
        if flow_per_lane > self.capacity_per_lane() {
            return None;
        }
        let (mut lo, mut hi) = (0.0, self.rho_c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.flow_per_lane(mid) < flow_per_lane {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_density_gives_free_flow_speed() {
        let fd = FundamentalDiagram::new(110.0, 30.0, 2.0).unwrap();
        assert_eq!(fd.equilibrium_speed(0.0).unwrap(), 110.0);
    }

    #[test]
    fn critical_density_speed() {
        let fd = FundamentalDiagram::new(110.0, 30.0, 2.0).unwrap();
        let v = fd.equilibrium_speed(30.0).unwrap();
        assert!((v - 66.718_372_568_389_68).abs() < 1e-9);
    }

    #[test]
    fn exponent_one_at_twice_critical() {
        let fd = FundamentalDiagram::new(110.0, 30.0, 1.0).unwrap();
        let v = fd.equilibrium_speed(60.0).unwrap();
        assert!((v - 14.886_881_156_027_398).abs() < 1e-9);
    }

    #[test]
    fn negative_density_rejected() {
        let fd = FundamentalDiagram::new(110.0, 30.0, 2.0).unwrap();
        assert!(fd.equilibrium_speed(-0.1).is_err());
        assert!(fd.equilibrium_speed(f64::NAN).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(FundamentalDiagram::new(0.0, 30.0, 2.0).is_err());
        assert!(FundamentalDiagram::new(110.0, -1.0, 2.0).is_err());
        assert!(FundamentalDiagram::new(110.0, 30.0, 0.0).is_err());
    }

    #[test]
    fn flow_peaks_at_critical_density() {
        for &(v_f, rho_c, a) in &[(110.0, 30.0, 2.0), (95.0, 33.5, 1.7), (120.0, 25.0, 3.5)] {
            let fd = FundamentalDiagram::new(v_f, rho_c, a).unwrap();
            let (argmax, _) = (1..=20_000)
                .map(|i| i as f64 * 0.01)
                .map(|rho| (rho, fd.flow_per_lane(rho)))
                .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
            assert!((argmax - rho_c).abs() <= 0.01, "argmax {argmax} vs {rho_c}");
        }
    }

    #[test]
    fn free_flow_density_inverts_flow() {
        let fd = FundamentalDiagram::new(110.0, 30.0, 2.0).unwrap();
        let rho = fd.free_flow_density(1500.0).unwrap();
        assert!((fd.flow_per_lane(rho) - 1500.0).abs() < 1e-8);
        assert!(rho < 30.0);
        assert!(fd.free_flow_density(fd.capacity_per_lane() + 1.0).is_none());
    }

    proptest! {
        #[test]
        fn speed_strictly_decreasing(
            v_f in 50.0..150.0f64, rho_c in 15.0..50.0f64, a in 0.5..6.0f64,
            r1 in 0.0..150.0f64, dr in 0.01..30.0f64,
        ) {
            let fd = FundamentalDiagram::new(v_f, rho_c, a).unwrap();
            let v1 = fd.equilibrium_speed(r1).unwrap();
            let v2 = fd.equilibrium_speed(r1 + dr).unwrap();
            prop_assert!(v1 >= v2);
            // Strictness is only observable once the exponents differ by more
            // than rounding, and before both underflow.
            let gap = ((r1 + dr) / rho_c).powf(a) / a - (r1 / rho_c).powf(a) / a;
            if gap > 1e-12 && v1 > 1e-250 {
                prop_assert!(v1 > v2);
            }
        }
    }
}

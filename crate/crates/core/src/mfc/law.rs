use crate::error::{invalid, Result};
use crate::traffic::RampParams;

/// First-order ultra-local model `ẏ = F + α·u`.
///
/// For ramp metering `y` is the density of the metered segment and `u` the
/// metering rate; admitting vehicles raises the density, so `α > 0` there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltraLocalModel {
    pub alpha: f64,
    /// Current estimate `[F]_e`.
    pub f_est: f64,
}

impl UltraLocalModel {
    /// Derivative order of the model; only first order is supported.
    pub const ORDER: u32 = 1;

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(invalid(format!("alpha must be finite and nonzero, got {alpha}")));
        }
        Ok(Self { alpha, f_est: 0.0 })
    }
}

/// Gains and integral state of an intelligent PI controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpiGains {
    /// Proportional gain (1/h).
    pub kp: f64,
    /// Integral gain (1/h²); zero gives the intelligent P controller.
    pub ki: f64,
    /// Accumulated `∫e`.
    pub integral: f64,
}

impl IpiGains {
    pub fn new(kp: f64, ki: f64) -> Result<Self> {
        if !(kp > 0.0) || !(ki >= 0.0) {
            return Err(invalid(format!("need kp > 0 and ki >= 0 (got {kp}, {ki})")));
        }
        Ok(Self { kp, ki, integral: 0.0 })
    }
}

/// `[F]_e = ẏ_e − α·u(k−1)`.
#[inline]
pub fn estimate_f_from_derivative(y_dot_est: f64, alpha: f64, u_prev: f64) -> f64 {
    y_dot_est - alpha * u_prev
}

/// iPI law `u = −([F]_e − ẏ* + K_P e + K_I ∫e) / α`, unclamped.
///
/// `e = y − y*`. Substituted into `ẏ = F + α u` it leaves
/// `ė + K_P e + K_I ∫e = F − [F]_e`.
#[inline]
pub fn ipi_control(model: &UltraLocalModel, y_star_dot: f64, e: f64, gains: &IpiGains) -> f64 {
    -(model.f_est - y_star_dot + gains.kp * e + gains.ki * gains.integral) / model.alpha
}

/// iP law, the `K_I = 0` case of [`ipi_control`].
#[inline]
pub fn ip_control(model: &UltraLocalModel, y_star_dot: f64, e: f64, kp: f64) -> f64 {
    -(model.f_est - y_star_dot + kp * e) / model.alpha
}

/// Saturates a control to the ramp's admissible interval.
#[inline]
pub fn clamp_control(u: f64, ramp: &RampParams) -> f64 {
    u.clamp(ramp.r_min, ramp.r_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(alpha: f64, f_est: f64) -> UltraLocalModel {
        UltraLocalModel { alpha, f_est }
    }

    #[test]
    fn f_from_derivative_examples() {
        assert_eq!(estimate_f_from_derivative(50.0 * 0.4, 50.0, 0.4), 0.0);
        assert_eq!(estimate_f_from_derivative(0.0, 50.0, 0.4), -20.0);
    }

    #[test]
    fn perfect_tracking_needs_no_correction() {
        let g = IpiGains::new(3.0, 2.0).unwrap();
        assert_eq!(ipi_control(&model(40.0, 7.0), 7.0, 0.0, &g), 0.0);
        assert_eq!(ip_control(&model(40.0, 7.0), 7.0, 0.0, 3.0), 0.0);
    }

    #[test]
    fn negative_alpha_example() {
        let g = IpiGains::new(1.0, 0.0).unwrap();
        let u = ipi_control(&model(-50.0, 0.0), 0.0, 2.0, &g);
        assert!((u - 0.04).abs() < 1e-15);
        assert!((ip_control(&model(-50.0, 0.0), 0.0, 2.0, 1.0) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn ip_is_ipi_without_integral_gain() {
        let mut g = IpiGains::new(20.0, 0.0).unwrap();
        g.integral = 123.0;
        let m = model(1800.0, -35.0);
        assert_eq!(ipi_control(&m, 4.0, 1.5, &g), ip_control(&m, 4.0, 1.5, 20.0));
    }

    #[test]
    fn configuration_checks() {
        assert!(UltraLocalModel::new(0.0).is_err());
        assert!(UltraLocalModel::new(f64::INFINITY).is_err());
        assert!(IpiGains::new(0.0, 1.0).is_err());
        assert!(IpiGains::new(1.0, -1.0).is_err());
    }

    #[test]
    fn clamp_examples() {
        let unit = RampParams::default();
        assert_eq!(clamp_control(0.5, &unit), 0.5);
        assert_eq!(clamp_control(1.7, &unit), 1.0);
        let floor = RampParams { r_min: 0.05, ..RampParams::default() };
        assert_eq!(clamp_control(-0.2, &floor), 0.05);
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(u in -10.0..10.0f64, lo in 0.0..0.5f64) {
            let ramp = RampParams { r_min: lo, ..RampParams::default() };
            let once = clamp_control(u, &ramp);
            prop_assert_eq!(clamp_control(once, &ramp), once);
            prop_assert!(once >= lo && once <= 1.0);
        }

        #[test]
        fn ipi_is_affine(
            f1 in -500.0..500.0f64, f2 in -500.0..500.0f64,
            e1 in -20.0..20.0f64, e2 in -20.0..20.0f64,
            i1 in -5.0..5.0f64, i2 in -5.0..5.0f64,
            alpha in 10.0..3000.0f64, kp in 1.0..100.0f64, ki in 0.0..1000.0f64,
        ) {
            // u(x1 + x2) − u(0) = (u(x1) − u(0)) + (u(x2) − u(0))
            let u = |f: f64, e: f64, i: f64| {
                let g = IpiGains { kp, ki, integral: i };
                ipi_control(&model(alpha, f), 0.0, e, &g)
            };
            let lhs = u(f1 + f2, e1 + e2, i1 + i2) - u(0.0, 0.0, 0.0);
            let rhs = (u(f1, e1, i1) - u(0.0, 0.0, 0.0)) + (u(f2, e2, i2) - u(0.0, 0.0, 0.0));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}

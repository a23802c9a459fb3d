use std::fmt;

/// Why a sample did not contribute to the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rejection {
    /// Differentiators still filling their windows.
    Warmup,
    /// `|ρ̇|` at or below the guard: the ratio is uninformative.
    RhoDotSmall,
    /// `W >= 0`, impossible for a decreasing diagram.
    WNonNegative,
    /// `|W|` at or below the guard.
    WSmall,
    NonPositiveSpeed,
    NonPositiveDensity,
    /// Raw `a` outside the accepted band.
    AOutOfBand,
    /// A derived quantity was not finite or not positive.
    Degenerate,
    /// Long run of rejections: traffic carries no information.
    Uninformative,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Warmup => "warmup",
            Self::RhoDotSmall => "rho_dot_small",
            Self::WNonNegative => "w_nonnegative",
            Self::WSmall => "w_small",
            Self::NonPositiveSpeed => "speed_nonpositive",
            Self::NonPositiveDensity => "density_nonpositive",
            Self::AOutOfBand => "a_out_of_band",
            Self::Degenerate => "degenerate",
            Self::Uninformative => "uninformative_regime",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `V_ρ = V̇ / ρ̇`.
pub fn chain_rule_derivative(v_dot: f64, rho_dot: f64, eps_rho_dot: f64) -> Result<f64, Rejection> {
    if !(rho_dot.abs() > eps_rho_dot) {
        return Err(Rejection::RhoDotSmall);
    }
    Ok(v_dot / rho_dot)
}

/// `W = V_ρ / V`; must be negative.
pub fn log_derivative(v: f64, v_rho: f64) -> Result<f64, Rejection> {
    if !(v > 0.0) {
        return Err(Rejection::NonPositiveSpeed);
    }
    let w = v_rho / v;
    if !(w < 0.0) {
        return Err(Rejection::WNonNegative);
    }
    Ok(w)
}

/// `a = 1 + ρ W_ρ / W`, rejected outside `[a_min, a_max]`.
pub fn estimate_a(
    rho: f64,
    w: f64,
    w_rho: f64,
    eps_w: f64,
    band: (f64, f64),
) -> Result<f64, Rejection> {
    if !(rho > 0.0) {
        return Err(Rejection::NonPositiveDensity);
    }
    if !(w.abs() > eps_w) {
        return Err(Rejection::WSmall);
    }
    let a = 1.0 + rho * w_rho / w;
    if !(a >= band.0 && a <= band.1) {
        return Err(Rejection::AOutOfBand);
    }
    Ok(a)
}

/// `K = −W / (a ρ^{a−1})`.
pub fn estimate_k(rho: f64, w: f64, a: f64) -> Result<f64, Rejection> {
    let k = -w / (a * rho.powf(a - 1.0));
    if k.is_finite() && k > 0.0 {
        Ok(k)
    } else {
        Err(Rejection::Degenerate)
    }
}

/// `ρ_c = (a K)^{−1/a}`, the inverse of `K = 1/(a ρ_c^a)`.
pub fn estimate_rho_c(k: f64, a: f64) -> f64 {
    (a * k).powf(-1.0 / a)
}

/// `v_f = V exp(K ρ^a)`.
pub fn estimate_vf(v: f64, rho: f64, k: f64, a: f64) -> f64 {
    v * (k * rho.powf(a)).exp()
}

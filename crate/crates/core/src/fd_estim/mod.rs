//! Online identification of May's fundamental diagram from density and
//! speed measurements.
//!
//! With `V = v_f exp(−K ρ^a)` and `K = 1/(a ρ_c^a)` the logarithmic
//! derivative `W = V_ρ / V = −K a ρ^{a−1}` satisfies `W_ρ / W = (a − 1)/ρ`,
//! so `a` follows from `W` and its density derivative, and then `K`, `ρ_c`
//! and `v_f` in closed form. Density derivatives are never taken directly:
//! both `V` and `W` are differentiated in time and divided by `ρ̇`.

mod algebra;
mod estimator;
mod synthetic;

pub use algebra::{
    chain_rule_derivative, estimate_a, estimate_k, estimate_rho_c, estimate_vf, log_derivative,
    Rejection,
};
pub use estimator::{
    run_estimator, write_estimates_csv, EstimateRow, EstimatorConfig, EstimatorState, FdEstimator,
    Published, RejectionCounts,
};
pub use synthetic::SinusoidalStream;

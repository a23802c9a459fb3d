//! Model-free ramp metering workbench.
//!
//! The crate couples four pieces:
//!
//! - [`traffic`]: a discrete second-order (METANET-style) freeway model with
//!   one metered on-ramp and May's exponential fundamental diagram.
//! - [`mfc`]: the ultra-local model `ẏ = F + α·u`, intelligent P/PI control
//!   laws, estimators for the lumped term `F`, and the reference-density
//!   generator used for ramp metering.
//! - [`algediff`]: sliding-window algebraic differentiation of noisy samples
//!   via iterated integrals.
//! - [`fd_estim`]: streaming identification of the fundamental diagram
//!   parameters `(v_f, ρ_c, a)` from density and speed series.
//!
//! [`harness`] runs closed-loop scenarios (iPI, iP, ALINEA, no control) and
//! computes metrics; [`cli`] holds file formats and the command
//! implementations behind the `rampmeter` binary.
//!
//! Units: densities in veh/km/lane, speeds in km/h, flows in veh/h, time in
//! hours internally. Configuration files use seconds for short durations.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algediff;
pub mod cli;
pub mod error;
pub mod fd_estim;
pub mod harness;
pub mod mfc;
pub mod traffic;

pub use error::{Error, Result};

/// Seconds per hour.
pub const SECS_PER_HOUR: f64 = 3600.0;

/// Converts a duration in seconds to hours.
#[inline]
pub fn secs_to_hours(s: f64) -> f64 {
    s / SECS_PER_HOUR
}

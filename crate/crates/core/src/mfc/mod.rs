//! Model-free control: the ultra-local model `ẏ = F + α·u`, intelligent
//! P/PI laws, estimators of the lumped term `F`, and the reference-density
//! generator used for ramp metering.

mod controller;
mod derivative;
mod integral;
mod law;
mod reference;

pub use controller::{ControlRecord, ControllerConfig, IpiLoop, LoopOutput, RampController};
pub use derivative::{estimate_output_derivative, DerivativeMethod, OutputDerivative};
pub use integral::{estimate_f_integral, FSample, FWindow};
pub use law::{
    clamp_control, estimate_f_from_derivative, ip_control, ipi_control, IpiGains, UltraLocalModel,
};
pub use reference::{reference_update, ReferenceConfig, ReferenceGenerator};

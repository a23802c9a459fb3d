//! Second-order macroscopic freeway model with one metered on-ramp.

mod fd;
mod metanet;
mod ramp;

pub use fd::FundamentalDiagram;
pub use metanet::{BoundaryInput, Freeway, FreewayState, SegmentParams, StepReport};
pub use ramp::{queue_step, ramp_flow, supply_ratio, RampParams, SupplyFormula};

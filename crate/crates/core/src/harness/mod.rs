//! Closed-loop scenario runs, baselines and metrics.

mod alinea;
mod metrics;
mod run;
mod scenario;

pub use alinea::{alinea_control, AlineaController};
pub use metrics::{compute_metrics, RunMetrics};
pub use run::{run, RunOutput, Trajectory, TrajectoryRow};
pub use scenario::{
    AlineaConfig, ControllerKind, ControllerSpec, Demand, Geometry, NoiseModel, Profile, Scenario,
    SCHEMA_VERSION,
};

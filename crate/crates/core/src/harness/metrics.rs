use std::fmt;

use super::Trajectory;

/// Summary statistics of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunMetrics {
    /// Total time spent on the mainline and in both queues (veh·h).
    pub tts: f64,
    /// Peak density of the metered segment (veh/km/lane).
    pub peak_density: f64,
    /// Time the metered segment spent above the critical density (h).
    pub time_above_critical: f64,
    /// Largest on-ramp queue (veh).
    pub max_queue: f64,
    /// Lowest speed of the metered segment (km/h).
    pub min_speed: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub r_mean: f64,
    /// Vehicles that left the stretch.
    pub throughput: f64,
}

/// Aggregates a trajectory. `lane_km` gives each segment's lane-kilometres.
pub fn compute_metrics(traj: &Trajectory, lane_km: &[f64], merge_index: usize, rho_c: f64) -> RunMetrics {
    let dt = traj.dt_h;
    if traj.rows.is_empty() {
        return RunMetrics::default();
    }
    let mut m = RunMetrics {
        min_speed: f64::INFINITY,
        r_min: f64::INFINITY,
        r_max: f64::NEG_INFINITY,
        ..RunMetrics::default()
    };
    let mut r_sum = 0.0;
    for row in &traj.rows {
        let mainline: f64 = row.rho.iter().zip(lane_km).map(|(r, l)| r * l).sum();
        m.tts += dt * (mainline + row.w + row.w_origin);
        let rho_s = row.rho[merge_index];
        m.peak_density = m.peak_density.max(rho_s);
        if rho_s > rho_c {
            m.time_above_critical += dt;
        }
        m.max_queue = m.max_queue.max(row.w);
        m.min_speed = m.min_speed.min(row.v[merge_index]);
        m.r_min = m.r_min.min(row.r);
        m.r_max = m.r_max.max(row.r);
        r_sum += row.r;
        m.throughput += dt * row.outflow;
    }
    m.r_mean = r_sum / traj.rows.len() as f64;
    m
}

impl fmt::Display for RunMetrics {
    /// Line-oriented `key=value` summary.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tts={}", self.tts)?;
        writeln!(f, "peak_density={}", self.peak_density)?;
        writeln!(f, "time_above_critical={}", self.time_above_critical)?;
        writeln!(f, "max_queue={}", self.max_queue)?;
        writeln!(f, "min_speed={}", self.min_speed)?;
        writeln!(f, "r_min={}", self.r_min)?;
        writeln!(f, "r_max={}", self.r_max)?;
        writeln!(f, "r_mean={}", self.r_mean)?;
        writeln!(f, "throughput={}", self.throughput)
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::traffic::FundamentalDiagram;

/// Sinusoidal density excitation read through an equilibrium diagram, with
/// optional multiplicative speed noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidalStream {
    pub diagram: FundamentalDiagram,
    pub rho_mean: f64,
    pub rho_amplitude: f64,
    pub period_h: f64,
    pub duration_h: f64,
    pub sample_period_s: f64,
    pub speed_noise: f64,
    pub seed: u64,
}

impl SinusoidalStream {
    /// `ρ = 20 + 10 sin(2πt / 2 h)` through `(110, 30, 2)`, 20 s samples,
    /// one day, no noise.
    pub fn reference() -> Self {
        Self {
            diagram: FundamentalDiagram { v_f: 110.0, rho_c: 30.0, a: 2.0 },
            rho_mean: 20.0,
            rho_amplitude: 10.0,
            period_h: 2.0,
            duration_h: 24.0,
            sample_period_s: 20.0,
            speed_noise: 0.0,
            seed: 0,
        }
    }

    pub fn density(&self, t_s: f64) -> f64 {
        let phase = std::f64::consts::TAU * t_s / (3600.0 * self.period_h);
        self.rho_mean + self.rho_amplitude * phase.sin()
    }

    /// `(t_s, density, speed)` samples.
    pub fn samples(&self) -> Result<Vec<(f64, f64, f64)>> {
        if !(self.rho_amplitude <= self.rho_mean && self.period_h > 0.0 && self.sample_period_s > 0.0)
        {
            return Err(invalid("stream needs 0 <= amplitude <= mean and positive periods"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = (self.duration_h * 3600.0 / self.sample_period_s).round() as usize;
        (0..n)
            .map(|k| {
                let t = k as f64 * self.sample_period_s;
                let rho = self.density(t);
                let mut v = self.diagram.equilibrium_speed(rho)?;
                if self.speed_noise > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v *= 1.0 + self.speed_noise * z;
                }
                Ok((t, rho, v))
            })
            .collect()
    }
}

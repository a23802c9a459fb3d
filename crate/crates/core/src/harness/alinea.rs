use crate::traffic::RampParams;

/// ALINEA integral law `r(k) = r(k−1) + k_r (ρ̂ − ρ)`, clamped to the
/// admissible interval. `k_r` is in control units per veh/km/lane.
///
/// Because the state is the clamped control itself, saturation cannot wind
/// up.
pub fn alinea_control(
    r_prev: f64,
    rho_target: f64,
    rho_measured: f64,
    k_r: f64,
    ramp: &RampParams,
) -> f64 {
    (r_prev + k_r * (rho_target - rho_measured)).clamp(ramp.r_min, ramp.r_max)
}

/// Stateful ALINEA controller.
#[derive(Debug, Clone)]
pub struct AlineaController {
    ramp: RampParams,
    target: f64,
    gain: f64,
    r: f64,
}

impl AlineaController {
    /// `gain_veh_h` is in veh/h per veh/km/lane and is scaled by the ramp
    /// capacity into control units.
    pub fn new(ramp: RampParams, target: f64, gain_veh_h: f64) -> Self {
        Self { ramp, target, gain: gain_veh_h / ramp.q_sat, r: ramp.r_max }
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn update(&mut self, rho_measured: f64) -> f64 {
        self.r = alinea_control(self.r, self.target, rho_measured, self.gain, &self.ramp);
        self.r
    }
}

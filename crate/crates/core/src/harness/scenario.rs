use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfc::{ControllerConfig, ReferenceConfig};
use crate::traffic::{Freeway, FundamentalDiagram, RampParams, SegmentParams};

/// Version of the scenario file layout understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Time profile of a boundary quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    /// Piecewise-linear `[t_h, value]` breakpoints, held constant outside.
    Table(Vec<[f64; 2]>),
    /// Raised cosine oscillating between `base` (at `t = 0`) and `peak`.
    #[serde(rename_all = "snake_case")]
    Periodic { base: f64, peak: f64, period_h: f64 },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Table(vec![[0.0, value]])
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        match self {
            Profile::Table(pts) => {
                if pts.is_empty() {
                    return Err(Error::Config(format!("{what}: profile is empty")));
                }
                if pts.iter().any(|[t, v]| !(t.is_finite() && *v >= 0.0 && v.is_finite())) {
                    return Err(Error::Config(format!("{what}: values must be finite and >= 0")));
                }
                if pts.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Config(format!("{what}: breakpoint times must increase")));
                }
            }
            Profile::Periodic { base, peak, period_h } => {
                if !(*base >= 0.0 && *peak >= 0.0 && peak.is_finite() && *period_h > 0.0) {
                    return Err(Error::Config(format!(
                        "{what}: periodic profile needs base, peak >= 0 and period_h > 0"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn at(&self, t_h: f64) -> f64 {
        let pts = match self {
            Profile::Table(pts) => pts,
            Profile::Periodic { base, peak, period_h } => {
                let c = (std::f64::consts::TAU * t_h / period_h).cos();
                return base + (peak - base) * 0.5 * (1.0 - c);
            }
        };
        let first = pts[0];
        if t_h <= first[0] {
            return first[1];
        }
        for w in pts.windows(2) {
            let ([t0, v0], [t1, v1]) = (w[0], w[1]);
            if t_h <= t1 {
                return v0 + (v1 - v0) * (t_h - t0) / (t1 - t0);
            }
        }
        pts[pts.len() - 1][1]
    }
}

/// Uniform segmentation with one merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub count: usize,
    /// Zero-based index of the segment receiving the on-ramp.
    pub merge_index: usize,
    #[serde(default)]
    pub merge_coefficient: f64,
    #[serde(default = "default_clamp_tolerance")]
    pub clamp_tolerance: f64,
    pub segment: SegmentParams,
}

fn default_clamp_tolerance() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demand {
    /// Mainline demand at the origin (veh/h).
    pub mainline: Profile,
    /// On-ramp demand (veh/h).
    pub ramp: Profile,
    /// Downstream boundary density; mirrors the last segment when absent.
    #[serde(default)]
    pub downstream_density: Option<Profile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Ipi,
    Ip,
    Alinea,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlineaConfig {
    /// Target density; the critical density when unset.
    pub target: Option<f64>,
    /// Gain in veh/h per veh/km/lane.
    pub gain: f64,
    /// Gains tried by baseline comparisons.
    pub grid: Vec<f64>,
}

impl Default for AlineaConfig {
    fn default() -> Self {
        Self { target: None, gain: 70.0, grid: vec![20.0, 40.0, 70.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    #[serde(default)]
    pub ipi: ControllerConfig,
    #[serde(default)]
    pub alinea: AlineaConfig,
}

/// Measurement noise applied to what the controller sees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Standard deviation of the multiplicative speed noise.
    pub speed_sigma: f64,
    /// Standard deviation of the additive density noise (veh/km/lane).
    pub density_sigma: f64,
}

/// Everything needed for one reproducible run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub duration_h: f64,
    pub sim_step_s: f64,
    pub seed: u64,
    pub diagram: FundamentalDiagram,
    pub geometry: Geometry,
    pub ramp: RampParams,
    pub demand: Demand,
    pub controller: ControllerSpec,
    #[serde(default)]
    pub noise: NoiseModel,
}

impl Scenario {
    /// Four-hour demand surge on a six-segment, two-lane freeway with the
    /// on-ramp at the fourth segment.
    pub fn surge() -> Self {
        let trapezoid = |base: f64, peak: f64| {
            Profile::Table(vec![
                [0.0, base],
                [0.5, base],
                [1.0, peak],
                [2.0, peak],
                [2.5, base],
                [4.0, base],
            ])
        };
        Self {
            schema_version: SCHEMA_VERSION,
            name: "surge".into(),
            duration_h: 4.0,
            sim_step_s: 10.0,
            seed: 1,
            diagram: FundamentalDiagram { v_f: 110.0, rho_c: 33.5, a: 2.0 },
            geometry: Geometry {
                count: 6,
                merge_index: 3,
                merge_coefficient: 0.0,
                clamp_tolerance: default_clamp_tolerance(),
                segment: SegmentParams::default(),
            },
            ramp: RampParams::default(),
            demand: Demand {
                mainline: trapezoid(2500.0, 4200.0),
                ramp: trapezoid(300.0, 900.0),
                downstream_density: None,
            },
            controller: ControllerSpec {
                kind: ControllerKind::Ipi,
                ipi: ControllerConfig {
                    reference: ReferenceConfig { rho_d0: 31.0, ..ReferenceConfig::default() },
                    ..ControllerConfig::default()
                },
                alinea: AlineaConfig::default(),
            },
            noise: NoiseModel::default(),
        }
    }

    /// Five days of uncontrolled traffic with the mainline demand
    /// oscillating hourly between 300 and 4300 veh/h: rich free-flow
    /// excitation for diagram identification.
    pub fn identification() -> Self {
        let mut s = Self::surge().with_controller(ControllerKind::None);
        s.name = "identification".into();
        s.duration_h = 120.0;
        s.demand = Demand {
            mainline: Profile::Periodic { base: 300.0, peak: 4300.0, period_h: 1.0 },
            ramp: Profile::constant(300.0),
            downstream_density: None,
        };
        s
    }

    pub fn with_controller(mut self, kind: ControllerKind) -> Self {
        self.controller.kind = kind;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.duration_h > 0.0) {
            return Err(Error::Config("duration_h must be > 0".into()));
        }
        if !(self.sim_step_s > 0.0) {
            return Err(Error::Config("sim_step_s must be > 0".into()));
        }
        let ratio = self.ramp.control_period_s / self.sim_step_s;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::Config(format!(
                "control period {} s must be a whole multiple of the {} s step",
                self.ramp.control_period_s, self.sim_step_s
            )));
        }
        self.demand.mainline.validate("demand.mainline")?;
        self.demand.ramp.validate("demand.ramp")?;
        if let Some(p) = &self.demand.downstream_density {
            p.validate("demand.downstream_density")?;
        }
        if !(self.noise.speed_sigma >= 0.0 && self.noise.density_sigma >= 0.0) {
            return Err(Error::Config("noise sigmas must be >= 0".into()));
        }
        self.freeway()?;
        self.controller.ipi.reference.validate()?;
        Ok(())
    }

    pub fn freeway(&self) -> Result<Freeway> {
        let g = &self.geometry;
        let mut fw = Freeway::new(
            vec![g.segment; g.count],
            self.ramp,
            self.diagram,
            g.merge_index,
        )?;
        fw.merge_coefficient = g.merge_coefficient;
        fw.clamp_tolerance = g.clamp_tolerance;
        fw.validate()?;
        Ok(fw)
    }

    /// Simulation steps per control period.
    pub fn steps_per_control(&self) -> usize {
        (self.ramp.control_period_s / self.sim_step_s).round() as usize
    }

    /// Default iPI input gain: the density rate produced by a fully open
    /// ramp at capacity, `Q_sat / (L λ)` of the merge segment.
    pub fn default_alpha(&self) -> f64 {
        self.ramp.q_sat / self.geometry.segment.lane_km()
    }

    pub fn ramp_params(&self) -> &RampParams {
        &self.ramp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_interpolates_and_holds() {
        let p = Profile::Table(vec![[1.0, 10.0], [2.0, 20.0]]);
        assert_eq!(p.at(0.0), 10.0);
        assert_eq!(p.at(1.5), 15.0);
        assert_eq!(p.at(3.0), 20.0);
    }

    #[test]
    fn periodic_profile_spans_base_to_peak() {
        let p = Profile::Periodic { base: 100.0, peak: 300.0, period_h: 2.0 };
        assert_eq!(p.at(0.0), 100.0);
        assert!((p.at(1.0) - 300.0).abs() < 1e-12);
        assert!((p.at(0.5) - 200.0).abs() < 1e-9);
        assert!(Profile::Periodic { base: 1.0, peak: 2.0, period_h: 0.0 }.validate("x").is_err());
    }

    #[test]
    fn scenarios_round_trip_through_toml() {
        for s in [Scenario::surge(), Scenario::identification()] {
            assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
        }
    }

    #[test]
    fn rejects_bad_schema_and_timing() {
        let mut s = Scenario::surge();
        s.schema_version = 99;
        assert!(s.validate().is_err());
        let mut s = Scenario::surge();
        s.sim_step_s = 15.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::surge();
        s.demand.mainline = Profile::Table(vec![[0.0, 100.0], [0.0, 200.0]]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = Scenario::surge().to_toml() + "\nbogus = 1\n";
        assert!(Scenario::from_toml(&text).is_err());
    }
}

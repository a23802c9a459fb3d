use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Which traffic-state column a detector file carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    /// Occupancy in percent, converted on ingestion.
    Occupancy,
    /// Density in veh/km/lane.
    Density,
}

/// One detector sample after conversion and gap filling.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorRecord {
    /// Seconds since the start of the record.
    pub t: f64,
    pub station: Option<String>,
    /// veh/km/lane.
    pub density: f64,
    /// km/h.
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Effective vehicle length (vehicle plus detector zone), m.
    pub l_eff_m: f64,
    /// Divides converted density when occupancy is summed over lanes.
    pub lanes_divisor: f64,
    /// Longest run of missing samples that is forward-filled.
    pub max_fill: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { l_eff_m: 7.0, lanes_divisor: 1.0, max_fill: 3 }
    }
}

/// `ρ = (occ/100)·(1000/l_eff) / lanes`, veh/km/lane.
pub fn occupancy_to_density(occ_percent: f64, l_eff_m: f64, lanes: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&occ_percent) {
        return Err(invalid(format!("occupancy {occ_percent} outside [0, 100]")));
    }
    if !(l_eff_m > 0.0 && lanes > 0.0) {
        return Err(invalid("l_eff and lanes must be > 0"));
    }
    Ok(occ_percent / 100.0 * 1000.0 / l_eff_m / lanes)
}

/// Ingestion summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub rows: usize,
    pub filled: usize,
    pub dropped: usize,
    pub out_of_range: usize,
}

struct Columns {
    t: usize,
    station: Option<usize>,
    state: usize,
    speed: usize,
    mode: DetectorMode,
}

fn locate(header: &csv::StringRecord, label: &str) -> Result<Columns> {
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let parse_err = |msg: String| Error::Parse { path: label.into(), line: 1, msg };
    let (state, mode) = match (find("occupancy"), find("density")) {
        (Some(i), None) => (i, DetectorMode::Occupancy),
        (None, Some(i)) => (i, DetectorMode::Density),
        (Some(_), Some(_)) => {
            return Err(parse_err("header has both occupancy and density".into()));
        }
        (None, None) => return Err(parse_err("header needs an occupancy or density column".into())),
    };
    Ok(Columns {
        t: find("t").ok_or_else(|| parse_err("header needs a t column".into()))?,
        station: find("station"),
        state,
        speed: find("speed").ok_or_else(|| parse_err("header needs a speed column".into()))?,
        mode,
    })
}

fn field(rec: &csv::StringRecord, i: usize, label: &str, line: usize, name: &str) -> Result<Option<f64>> {
    let raw = rec.get(i).unwrap_or("").trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>().map(Some).map_err(|_| Error::Parse {
        path: label.into(),
        line,
        msg: format!("{name}: cannot parse {raw:?} as a number"),
    })
}

/// Per-column forward fill that gives up after `max` consecutive gaps.
struct Filler {
    last: Option<f64>,
    run: usize,
    max: usize,
}

impl Filler {
    fn take(&mut self, x: Option<f64>) -> (Option<f64>, bool) {
        match x {
            Some(v) => {
                self.last = Some(v);
                self.run = 0;
                (Some(v), false)
            }
            None => {
                self.run += 1;
                if self.run <= self.max {
                    (self.last, self.last.is_some())
                } else {
                    (None, false)
                }
            }
        }
    }
}

/// Parses a detector CSV. Empty fields are missing; out-of-range values
/// are treated as missing. Missing values are forward-filled for up to
/// `max_fill` consecutive samples; rows beyond that are dropped, which
/// leaves a time gap downstream consumers see.
pub fn parse_detector_csv<R: Read>(
    input: R,
    label: &str,
    cfg: &IngestConfig,
) -> Result<(DetectorMode, Vec<DetectorRecord>, IngestReport)> {
    if !(cfg.l_eff_m > 0.0 && cfg.lanes_divisor > 0.0) {
        return Err(Error::Config("l_eff_m and lanes_divisor must be > 0".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rdr.headers()?.clone();
    let cols = locate(&header, label)?;
    let mut state_fill = Filler { last: None, run: 0, max: cfg.max_fill };
    let mut speed_fill = Filler { last: None, run: 0, max: cfg.max_fill };
    let mut out = Vec::new();
    let mut report = IngestReport::default();
    let mut t_prev = f64::NEG_INFINITY;
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        report.rows += 1;
        let t = field(&rec, cols.t, label, line, "t")?.ok_or_else(|| Error::Parse {
            path: label.into(),
            line,
            msg: "t is missing".into(),
        })?;
        if !(t > t_prev) {
            return Err(Error::Parse {
                path: label.into(),
                line,
                msg: format!("t must increase strictly ({t} after {t_prev})"),
            });
        }
        t_prev = t;
        let mut state = field(&rec, cols.state, label, line, "state")?;
        let mut speed = field(&rec, cols.speed, label, line, "speed")?;
        let state_ok = match cols.mode {
            DetectorMode::Occupancy => |x: f64| (0.0..=100.0).contains(&x),
            DetectorMode::Density => |x: f64| x >= 0.0 && x.is_finite(),
        };
        if state.is_some_and(|x| !state_ok(x)) {
            state = None;
            report.out_of_range += 1;
        }
        if speed.is_some_and(|x| !(x >= 0.0 && x.is_finite())) {
            speed = None;
            report.out_of_range += 1;
        }
        let (state, f1) = state_fill.take(state);
        let (speed, f2) = speed_fill.take(speed);
        let (Some(state), Some(speed)) = (state, speed) else {
            report.dropped += 1;
            continue;
        };
        report.filled += usize::from(f1 || f2);
        let density = match cols.mode {
            DetectorMode::Occupancy => occupancy_to_density(state, cfg.l_eff_m, cfg.lanes_divisor)?,
            DetectorMode::Density => state,
        };
        let station = cols.station.and_then(|i| rec.get(i)).map(|s| s.trim().to_string());
        out.push(DetectorRecord { t, station, density, speed });
    }
    Ok((cols.mode, out, report))
}

pub fn read_detector_csv(
    path: &Path,
    cfg: &IngestConfig,
) -> Result<(DetectorMode, Vec<DetectorRecord>, IngestReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_detector_csv(file, &path.display().to_string(), cfg)
}

/// Writes density-mode records; reading them back is lossless.
pub fn write_detector_csv<W: Write>(records: &[DetectorRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "station", "density", "speed"])?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.station.clone().unwrap_or_default(),
            r.density.to_string(),
            r.speed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

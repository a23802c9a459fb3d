use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ingest::{read_detector_csv, write_detector_csv, DetectorRecord, IngestConfig};
use crate::algediff::{derivative_stream, DiffConfig, EvalPoint};
use crate::error::{invalid, Error, Result};
use crate::fd_estim::{run_estimator, write_estimates_csv, EstimatorConfig, Published};
use crate::harness::{run, Scenario};
use crate::traffic::FundamentalDiagram;

/// Environment variable that replaces the default output directory.
pub const OUT_DIR_ENV: &str = "RAMPMETER_OUT_DIR";

/// `--out` if given, else the environment override, else the working
/// directory.
pub fn resolve_out_dir(out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_toml(&read_text(path)?).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Runs a scenario; writes `trajectory.csv` and `metrics.txt`.
pub fn simulate(scenario: &Path, out_dir: &Path) -> Result<String> {
    let sc = load_scenario(scenario)?;
    let out = run(&sc)?;
    let traj = out_dir.join("trajectory.csv");
    out.trajectory.write_csv(create(&traj)?)?;
    let metrics = out.metrics.to_string();
    let path = out_dir.join("metrics.txt");
    fs::write(&path, &metrics).map_err(|e| Error::io(&path, e))?;
    Ok(metrics)
}

/// Settings file of the `estimate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSettings {
    pub schema_version: u32,
    pub ingest: IngestConfig,
    pub estimator: EstimatorConfig,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        Self {
            schema_version: crate::harness::SCHEMA_VERSION,
            ingest: IngestConfig::default(),
            estimator: EstimatorConfig::default(),
        }
    }
}

impl EstimateSettings {
    pub fn load(path: &Path) -> Result<Self> {
        let s: Self = toml::from_str(&read_text(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if s.schema_version != crate::harness::SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported schema_version {}",
                path.display(),
                s.schema_version
            )));
        }
        s.estimator.validate()?;
        Ok(s)
    }
}

fn published_summary(p: Option<Published>) -> String {
    match p {
        Some(p) => format!("a={}\nK={}\nrho_c={}\nv_f={}\n", p.a, p.k, p.rho_c, p.v_f),
        None => "published=none\n".into(),
    }
}

fn median_step(ts: &[f64]) -> Option<f64> {
    let mut d: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    Some(d[d.len() / 2])
}

/// Keeps one station's records; errors if the choice is ambiguous.
fn select_station(records: Vec<DetectorRecord>, station: Option<&str>) -> Result<Vec<DetectorRecord>> {
    match station {
        Some(id) => {
            let kept: Vec<_> =
                records.into_iter().filter(|r| r.station.as_deref() == Some(id)).collect();
            if kept.is_empty() {
                return Err(invalid(format!("no records for station {id:?}")));
            }
            Ok(kept)
        }
        None => {
            let first = records.first().and_then(|r| r.station.clone());
            if records.iter().any(|r| r.station != first) {
                return Err(invalid("several stations in file; choose one with --station"));
            }
            Ok(records)
        }
    }
}

/// Runs the diagram estimator on a detector file; writes `estimates.csv`.
pub fn estimate(
    csv: &Path,
    settings: &EstimateSettings,
    station: Option<&str>,
    out_dir: &Path,
) -> Result<String> {
    let (_, records, report) = read_detector_csv(csv, &settings.ingest)?;
    let records = select_station(records, station)?;
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let dt = settings.estimator.sample_period_s;
    if let Some(step) = median_step(&ts) {
        if (step - dt).abs() > 0.01 * dt {
            return Err(Error::Config(format!(
                "{}: sampling step {step} s differs from estimator.sample_period_s {dt} s",
                csv.display()
            )));
        }
    }
    let samples: Vec<_> = records.iter().map(|r| (r.t, r.density, r.speed)).collect();
    let (rows, state) = run_estimator(&samples, settings.estimator)?;
    write_estimates_csv(&rows, create(&out_dir.join("estimates.csv"))?)?;
    Ok(format!(
        "{}updates={}\naccepted={}\nrejection_rate={}\nfilled={}\ndropped={}\n",
        published_summary(state.published),
        state.counts.samples,
        state.counts.accepted,
        state.counts.rejection_rate(),
        report.filled,
        report.dropped,
    ))
}

/// Options of the `differentiate` command.
#[derive(Debug, Clone)]
pub struct DifferentiateOptions {
    pub column: String,
    pub time_column: String,
    pub degree: usize,
    pub window_s: f64,
    pub eval_point: EvalPoint,
    pub sample_period_s: Option<f64>,
}

/// Differentiates one column of a CSV; writes `derivatives.csv`. Rows with
/// an empty cell are treated as missing samples.
pub fn differentiate(csv: &Path, opts: &DifferentiateOptions, out_dir: &Path) -> Result<String> {
    let label = csv.display().to_string();
    let file = fs::File::open(csv).map_err(|e| Error::io(csv, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
            path: label.clone(),
            line: 1,
            msg: format!("no column named {name:?}"),
        })
    };
    let (ti, xi) = (col(&opts.time_column)?, col(&opts.column)?);
    let mut samples = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<Option<f64>> {
            let raw = rec.get(i).unwrap_or("").trim();
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse().map(Some).map_err(|_| Error::Parse {
                path: label.clone(),
                line: k + 2,
                msg: format!("cannot parse {raw:?} as a number"),
            })
        };
        if let (Some(t), Some(x)) = (num(ti)?, num(xi)?) {
            samples.push((t, x));
        }
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let dt = opts
        .sample_period_s
        .or_else(|| median_step(&ts))
        .ok_or_else(|| invalid("need at least two samples"))?;
    let mut cfg = match opts.degree {
        1 => DiffConfig::first_derivative(),
        2 => DiffConfig::second_derivative(),
        d => return Err(invalid(format!("degree must be 1 or 2, got {d}"))),
    };
    cfg.window_s = opts.window_s;
    cfg.eval_point = opts.eval_point;
    let est = derivative_stream(&samples, dt, cfg)?;
    let mut w = csv::Writer::from_writer(create(&out_dir.join("derivatives.csv"))?);
    w.write_record(["t_emit", "t_ref", "value", "d1", "d2"])?;
    for e in &est {
        w.write_record([
            e.t_emit.to_string(),
            e.t_ref.to_string(),
            e.value.to_string(),
            e.d1.to_string(),
            e.d2.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out_dir, e))?;
    Ok(format!("samples={}\nestimates={}\nsample_period_s={dt}\n", samples.len(), est.len()))
}

/// Ground truth written next to synthetic detector data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthTruth {
    pub scenario: String,
    pub seed: u64,
    pub segment: usize,
    pub sample_period_s: f64,
    pub speed_noise: f64,
    pub diagram: FundamentalDiagram,
    pub k: f64,
}

impl SynthTruth {
    pub fn load(path: &Path) -> Result<Self> {
        toml::from_str(&read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Sidecar path for a synthetic data file: `name.csv` → `name.truth.toml`.
pub fn truth_path(csv: &Path) -> PathBuf {
    csv.with_extension("truth.toml")
}

/// Samples one segment of a simulation run as detector data, with
/// multiplicative speed noise.
pub fn synthesize(
    sc: &Scenario,
    segment: Option<usize>,
    sample_period_s: f64,
    speed_noise: f64,
) -> Result<(Vec<DetectorRecord>, SynthTruth)> {
    let segment = segment.unwrap_or(sc.geometry.merge_index);
    if segment >= sc.geometry.count {
        return Err(invalid(format!("segment {segment} out of range")));
    }
    if !(speed_noise >= 0.0) {
        return Err(invalid("noise must be >= 0"));
    }
    let every = sample_period_s / sc.sim_step_s;
    if !(every >= 1.0 && (every - every.round()).abs() < 1e-9) {
        return Err(invalid("sample period must be a whole multiple of the simulation step"));
    }
    let out = run(sc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(1);
    let station = format!("{}-{segment}", sc.name);
    let records = out
        .trajectory
        .rows
        .iter()
        .step_by(every.round() as usize)
        .map(|row| {
            let mut v = row.v[segment];
            if speed_noise > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                v = (v * (1.0 + speed_noise * z)).max(0.0);
            }
            DetectorRecord {
                t: (row.t_h * crate::SECS_PER_HOUR * 1e6).round() / 1e6,
                station: Some(station.clone()),
                density: row.rho[segment],
                speed: v,
            }
        })
        .collect();
    let truth = SynthTruth {
        scenario: sc.name.clone(),
        seed: sc.seed,
        segment,
        sample_period_s,
        speed_noise,
        diagram: sc.diagram,
        k: sc.diagram.k(),
    };
    Ok((records, truth))
}

/// Writes synthetic detector data and its truth sidecar.
pub fn synth(
    scenario: &Path,
    speed_noise: f64,
    segment: Option<usize>,
    sample_period_s: f64,
    out_csv: &Path,
) -> Result<String> {
    let sc = load_scenario(scenario)?;
    let (records, truth) = synthesize(&sc, segment, sample_period_s, speed_noise)?;
    write_detector_csv(&records, create(out_csv)?)?;
    let sidecar = truth_path(out_csv);
    let text = toml::to_string_pretty(&truth).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))?;
    Ok(format!("records={}\ntruth={}\n", records.len(), sidecar.display()))
}

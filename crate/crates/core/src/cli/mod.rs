//! Command-line front end: detector ingestion, config loading and the
//! `simulate`, `estimate`, `differentiate` and `synth` commands.
//!
//! Failures print one line, `error[<code>]: <message>`, and exit with a
//! nonzero status.

mod commands;
mod ingest;

pub use commands::{
    differentiate, estimate, load_scenario, resolve_out_dir, simulate, synth, synthesize,
    truth_path, DifferentiateOptions, EstimateSettings, SynthTruth, OUT_DIR_ENV,
};
pub use ingest::{
    occupancy_to_density, parse_detector_csv, read_detector_csv, write_detector_csv,
    DetectorMode, DetectorRecord, IngestConfig, IngestReport,
};

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::algediff::EvalPoint;
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "rampmeter", version, about = "Ramp-metering simulation and identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EvalArg {
    Delayed,
    WindowEnd,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario; writes trajectory.csv and metrics.txt.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identify the fundamental diagram from detector data; writes estimates.csv.
    Estimate {
        detector_csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        station: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Differentiate one CSV column; writes derivatives.csv.
    Differentiate {
        csv: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, default_value = "t")]
        time_column: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        degree: u8,
        /// Window length (s).
        #[arg(long, default_value_t = 300.0)]
        window: f64,
        #[arg(long, value_enum, default_value_t = EvalArg::Delayed)]
        eval_point: EvalArg,
        /// Sampling period (s); inferred from the time column when omitted.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a simulated segment as detector data, plus a truth sidecar.
    Synth {
        scenario: PathBuf,
        /// Multiplicative speed-noise standard deviation.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Segment to observe; the metered segment by default.
        #[arg(long)]
        segment: Option<usize>,
        /// Detector sampling period (s).
        #[arg(long, default_value_t = 20.0)]
        period: f64,
        /// Output CSV; `detector.csv` in the output directory by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Executes a parsed command and returns its key=value summary.
pub fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate { scenario, out } => {
            simulate(&scenario, &prepare(resolve_out_dir(out.as_deref()))?)
        }
        Command::Estimate { detector_csv, config, station, out } => {
            let settings = match config {
                Some(p) => EstimateSettings::load(&p)?,
                None => EstimateSettings::default(),
            };
            let dir = prepare(resolve_out_dir(out.as_deref()))?;
            estimate(&detector_csv, &settings, station.as_deref(), &dir)
        }
        Command::Differentiate { csv, column, time_column, degree, window, eval_point, dt, out } => {
            let opts = DifferentiateOptions {
                column,
                time_column,
                degree: degree.into(),
                window_s: window,
                eval_point: match eval_point {
                    EvalArg::Delayed => EvalPoint::Delayed,
                    EvalArg::WindowEnd => EvalPoint::WindowEnd,
                },
                sample_period_s: dt,
            };
            differentiate(&csv, &opts, &prepare(resolve_out_dir(out.as_deref()))?)
        }
        Command::Synth { scenario, noise, segment, period, out } => {
            let out = out.unwrap_or_else(|| resolve_out_dir(None).join("detector.csv"));
            synth(&scenario, noise, segment, period, &out)
        }
    }
}

fn prepare(dir: PathBuf) -> Result<PathBuf> {
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Single-line error rendering.
pub fn error_line(e: &Error) -> String {
    let msg = e.to_string().replace(['\n', '\r'], " ");
    format!("error[{}]: {msg}", e.code())
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}

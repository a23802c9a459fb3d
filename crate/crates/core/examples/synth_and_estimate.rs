//! Simulates the identification scenario, turns the merge segment into a
//! detector file and estimates the fundamental diagram back from it.

use rampmeter::cli::{estimate, synthesize, write_detector_csv, EstimateSettings};
use rampmeter::harness::Scenario;

fn main() -> rampmeter::Result<()> {
    let dir = std::env::temp_dir().join("rampmeter-synth-example");
    std::fs::create_dir_all(&dir).map_err(|e| rampmeter::Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let sc = Scenario::identification();
    let (records, truth) = synthesize(&sc, None, 20.0, 0.05)?;
    let csv = dir.join("detector.csv");
    let file = std::fs::File::create(&csv).map_err(|e| rampmeter::Error::Io {
        path: csv.display().to_string(),
        source: e,
    })?;
    write_detector_csv(&records, file)?;

    let settings = EstimateSettings::load(std::path::Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/estimate.toml"
    )))?;
    let summary = estimate(&csv, &settings, None, &dir)?;
    println!("truth: a={} rho_c={} v_f={}", truth.diagram.a, truth.diagram.rho_c, truth.diagram.v_f);
    println!("{summary}");
    println!("outputs in {}", dir.display());
    Ok(())
}

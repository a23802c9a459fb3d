//! Runs the surge scenario without control, with ALINEA and with the iPI
//! controller, and prints the headline metrics of each run.
//!
//! `cargo run --example surge_control [out.csv]` also writes the iPI
//! trajectory.

use std::fs::File;
use std::io::BufWriter;

use rampmeter::harness::{run, ControllerKind, Scenario};

fn main() -> rampmeter::Result<()> {
    let base = Scenario::surge();
    println!(
        "{:<8} {:>10} {:>8} {:>10} {:>10} {:>8}",
        "control", "TTS veh.h", "peak", "min speed", "max queue", "r mean"
    );
    for kind in [ControllerKind::None, ControllerKind::Alinea, ControllerKind::Ipi] {
        let out = run(&base.clone().with_controller(kind))?;
        let m = out.metrics;
        println!(
            "{:<8} {:>10.1} {:>8.2} {:>10.1} {:>10.1} {:>8.3}",
            format!("{kind:?}").to_lowercase(),
            m.tts,
            m.peak_density,
            m.min_speed,
            m.max_queue,
            m.r_mean
        );
        if kind == ControllerKind::Ipi {
            if let Some(path) = std::env::args().nth(1) {
                let file = File::create(&path).map_err(|e| rampmeter::Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                out.trajectory.write_csv(BufWriter::new(file))?;
                println!("wrote {path}");
            }
        }
    }
    println!("critical density {:.1} veh/km/lane", base.diagram.rho_c);
    Ok(())
}

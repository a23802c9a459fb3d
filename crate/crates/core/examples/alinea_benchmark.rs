//! Sweeps the ALINEA gain grid on the surge scenario and compares the best
//! tuning with the iPI controller, with and without measurement noise.

use rampmeter::harness::{run, ControllerKind, Scenario};

fn tts(sc: &Scenario) -> rampmeter::Result<f64> {
    Ok(run(sc)?.metrics.tts)
}

fn main() -> rampmeter::Result<()> {
    for noisy in [false, true] {
        let mut base = Scenario::surge();
        if noisy {
            base.noise.speed_sigma = 0.05;
            base.noise.density_sigma = 0.5;
        }
        println!("{}", if noisy { "noisy measurements" } else { "exact measurements" });
        let mut best = f64::INFINITY;
        for &gain in &base.controller.alinea.grid {
            let mut sc = base.clone().with_controller(ControllerKind::Alinea);
            sc.controller.alinea.gain = gain;
            let t = tts(&sc)?;
            best = best.min(t);
            println!("  alinea gain {gain:>5.1}: TTS {t:.1}");
        }
        let ipi = tts(&base.clone().with_controller(ControllerKind::Ipi))?;
        println!("  ipi              : TTS {ipi:.1} ({:+.2}% vs best alinea)", 100.0 * (ipi - best) / best);
    }
    Ok(())
}

//! Recovers the fundamental diagram from a synthetic speed-density stream
//! and prints how the published estimate converges.

use rampmeter::fd_estim::{EstimatorConfig, FdEstimator, SinusoidalStream};

fn main() -> rampmeter::Result<()> {
    let stream = SinusoidalStream {
        rho_mean: 25.0,
        rho_amplitude: 20.0,
        period_h: 1.0,
        duration_h: 48.0,
        speed_noise: 0.05,
        seed: 7,
        ..SinusoidalStream::reference()
    };
    let truth = stream.diagram;
    let mut cfg = EstimatorConfig::default();
    cfg.diff.window_s = 600.0;
    cfg.w_diff.window_s = 600.0;
    cfg.update_period_s = 300.0;

    let mut est = FdEstimator::new(cfg)?;
    let mut next_report = 4.0;
    println!("truth: a {:.3}, rho_c {:.2}, v_f {:.2}", truth.a, truth.rho_c, truth.v_f);
    for (t, rho, v) in stream.samples()? {
        est.push(t, rho, v)?;
        if t / 3600.0 >= next_report {
            next_report += 4.0;
            match est.published() {
                Some(p) => println!(
                    "{:>4.0} h: a {:.3}, rho_c {:.2}, v_f {:.2}",
                    t / 3600.0,
                    p.a,
                    p.rho_c,
                    p.v_f
                ),
                None => println!("{:>4.0} h: nothing published yet", t / 3600.0),
            }
        }
    }
    let counts = &est.state().counts;
    println!(
        "updates {}, accepted {}, rejection rate {:.1}%",
        counts.samples,
        counts.accepted,
        100.0 * counts.rejection_rate()
    );
    Ok(())
}

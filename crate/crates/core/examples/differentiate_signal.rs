//! Streams a noisy sinusoid through the algebraic differentiator and reports
//! the error of the first and second derivative for several window lengths.

use rampmeter::algediff::{AlgebraicDifferentiator, DiffConfig, EvalPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> rampmeter::Result<()> {
    let dt = 20.0;
    let omega = std::f64::consts::TAU / 3600.0;
    let noise = Normal::new(0.0, 0.05).expect("valid deviation");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let signal: Vec<(f64, f64)> = (0..2000)
        .map(|k| {
            let t = dt * k as f64;
            (t, (omega * t).sin() + noise.sample(&mut rng))
        })
        .collect();

    println!("{:>8} {:>10} {:>12} {:>12}", "window s", "latency s", "d1 rmse %", "d2 rmse %");
    for window_s in [150.0, 300.0, 600.0, 1200.0] {
        for eval_point in [EvalPoint::Delayed, EvalPoint::WindowEnd] {
            let cfg = DiffConfig { window_s, eval_point, ..DiffConfig::second_derivative() };
            let mut diff = AlgebraicDifferentiator::new(dt, cfg)?;
            let (mut e1, mut e2, mut n) = (0.0, 0.0, 0usize);
            for &(t, x) in &signal {
                if let Some(est) = diff.push(t, x)? {
                    let tr = est.t_ref;
                    e1 += (est.d1 - omega * (omega * tr).cos()).powi(2);
                    e2 += (est.d2.unwrap_or(0.0) + omega * omega * (omega * tr).sin()).powi(2);
                    n += 1;
                }
            }
            let rmse = |e: f64, peak: f64| 100.0 * (e / n as f64).sqrt() / peak;
            println!(
                "{window_s:>8.0} {:>10.0} {:>12.2} {:>12.2}  ({eval_point:?})",
                diff.latency(),
                rmse(e1, omega),
                rmse(e2, omega * omega)
            );
        }
    }
    Ok(())
}

//! The intelligent PI loop on a scalar plant `y' = F(t) + alpha u` whose
//! drift `F` is unknown to the controller. Compares the tracking error with
//! an estimated `F` against the one obtained when `F` is given exactly.

use rampmeter::mfc::{DerivativeMethod, IpiGains, IpiLoop, OutputDerivative};

fn drift(t_h: f64) -> f64 {
    40.0 + 30.0 * (std::f64::consts::TAU * t_h / 1.5).sin()
}

fn simulate(exact: bool) -> rampmeter::Result<Vec<(f64, f64)>> {
    let (alpha, period_h) = (100.0, 20.0 / 3600.0);
    let gains = IpiGains::new(40.0, 400.0)?;
    let mut lp = IpiLoop::new(alpha, gains, (-10.0, 10.0), period_h, 0.0, 120.0 / 3600.0)?;
    let mut deriv = OutputDerivative::new(DerivativeMethod::BackwardDifference { smoothing: 0.5 }, period_h)?;
    let mut y = 28.0;
    let mut trace = Vec::new();
    for k in 0..(1.5 / period_h) as usize {
        let t = k as f64 * period_h;
        let y_star = if t < 0.5 { 28.0 } else { 32.0 };
        if exact {
            lp.set_f_estimate(drift(t));
        } else if let Some(y_dot) = deriv.push(y)? {
            lp.estimate_f(y_dot);
        }
        let out = lp.step(y, y_star, 0.0);
        trace.push((t, out.e));
        // Midpoint rule over one period is plenty for a smooth drift.
        y += (drift(t + period_h / 2.0) + alpha * out.u) * period_h;
    }
    Ok(trace)
}

fn main() -> rampmeter::Result<()> {
    let estimated = simulate(false)?;
    let exact = simulate(true)?;
    println!("{:>6} {:>12} {:>12}", "min", "e estimated", "e exact F");
    for ((t, e), (_, ex)) in estimated.iter().zip(&exact) {
        let minutes = (t - 0.5) * 60.0;
        if (-1.0..=15.0).contains(&minutes) && (minutes.round() - minutes).abs() < 1e-6 {
            println!("{minutes:>6.0} {e:>12.4} {ex:>12.4}");
        }
    }
    Ok(())
}

use super::quadrature::corrected_trapezoid;
use super::{DerivativeWindow, DiffConfig, EvalPoint};
use crate::error::{Error, Result};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Precomputed linear functionals mapping `n` uniform window samples to the
/// Taylor coefficients `b_0..=b_N` in window-normalised time `u = τ/T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    degree: usize,
    rows: Vec<Vec<f64>>,
    /// Normalised point where the top coefficient is exact one degree up.
    tau_star: f64,
}

impl Kernel {
    /// Builds the estimator for degree `degree`, `extra` integrations and
    /// `n` samples.
    ///
    /// With `m = extra - 1`, equation `j` (from the `j`-th `s`-derivative of
    /// `s^{N+1}X = Σ a_k k! s^{N-k}`) reads
    ///
    /// `Σ_i C(j,i) (N+1)!/(N+1-j+i)! (-1)^i I_{j-i+m}[u^i x]
    ///     = Σ_{k<=N-j} b_k k!(N-k)!/((N-k-j)! (k+j+m)!)`
    ///
    /// where `I_p[g] = ∫_0^1 (1-u)^{p-1}/(p-1)! g(u) du`. Solving `j = N`,
    /// `N-1`, ... in turn yields `b_0, b_1, ...`.
    pub fn new(degree: usize, extra: usize, n: usize) -> Result<Self> {
        if n < degree + 2 {
            return Err(Error::DegenerateWindow(format!(
                "{n} samples cannot support a degree-{degree} fit"
            )));
        }
        if extra < 2 {
            return Err(Error::DegenerateWindow(format!(
                "integral order {extra} leaves unintegrated terms"
            )));
        }
        let big_n = degree;
        let m = extra - 1;
        let weights = corrected_trapezoid(n, 2 * big_n + m);
        let h = 1.0 / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();

        // I_p[u^i ·] as a weight vector over the samples.
        let functional = |p: usize, i: usize| -> Vec<f64> {
            let norm = factorial(p - 1);
            nodes
                .iter()
                .zip(&weights)
                .map(|(&u, &w)| w * (1.0 - u).powi(p as i32 - 1) / norm * u.powi(i as i32))
                .collect()
        };
        let rhs_coeff = |j: usize, k: usize| -> f64 {
            factorial(k) * factorial(big_n - k)
                / (factorial(big_n - k - j) * factorial(k + j + m))
        };

        let mut rows: Vec<Vec<f64>> = vec![Vec::new(); big_n + 1];
        for j in (0..=big_n).rev() {
            let mut lhs = vec![0.0; n];
            for i in 0..=j {
                let c = binomial(j, i) * factorial(big_n + 1) / factorial(big_n + 1 - j + i)
                    * if i % 2 == 0 { 1.0 } else { -1.0 };
                for (acc, f) in lhs.iter_mut().zip(functional(j - i + m, i)) {
                    *acc += c * f;
                }
            }
            let target = big_n - j;
            for (k, row) in rows.iter().enumerate().take(target) {
                let c = rhs_coeff(j, k);
                for (acc, r) in lhs.iter_mut().zip(row) {
                    *acc -= c * r;
                }
            }
            let diag = rhs_coeff(j, target);
            rows[target] = lhs.into_iter().map(|x| x / diag).collect();
        }

        let probe: Vec<f64> = nodes.iter().map(|u| u.powi(big_n as i32 + 1)).collect();
        let top: f64 = rows[big_n].iter().zip(&probe).map(|(r, x)| r * x).sum();
        let tau_star = top / (big_n + 1) as f64;

        Ok(Self { degree, rows, tau_star })
    }

    pub fn from_config(cfg: &DiffConfig, sample_period_s: f64) -> Result<Self> {
        cfg.validate(sample_period_s)?;
        Self::new(cfg.degree, cfg.integral_order, cfg.samples(sample_period_s))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Normalised reference point in `[0, 1]`.
    pub fn tau_star(&self) -> f64 {
        self.tau_star
    }

    /// Applies the kernel to `values` (oldest first); `span` is the window
    /// duration and `t_start` the time of the oldest sample.
    pub fn fit<'a, I>(&self, values: I, t_start: f64, span: f64) -> LocalFit
    where
        I: IntoIterator<Item = &'a f64>,
        I::IntoIter: Clone,
    {
        let values = values.into_iter();
        let coeffs = self
            .rows
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let b: f64 = row.iter().zip(values.clone()).map(|(r, x)| r * x).sum();
                b / span.powi(k as i32)
            })
            .collect();
        LocalFit { t_start, span, coeffs, tau_star: self.tau_star }
    }
}

/// Local Taylor polynomial fitted over one window, expanded at its start.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFit {
    pub t_start: f64,
    pub span: f64,
    /// `a_k` in `x(t) ≈ Σ a_k (t - t_start)^k`.
    pub coeffs: Vec<f64>,
    tau_star: f64,
}

impl LocalFit {
    /// `order`-th derivative of the fitted polynomial at time `t`.
    pub fn derivative_at(&self, t: f64, order: usize) -> f64 {
        let tau = t - self.t_start;
        self.coeffs
            .iter()
            .enumerate()
            .skip(order)
            .map(|(k, a)| a * factorial(k) / factorial(k - order) * tau.powi((k - order) as i32))
            .sum()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.derivative_at(t, 0)
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.span
    }

    /// Time the estimate refers to under `eval`.
    pub fn reference_time(&self, eval: EvalPoint) -> f64 {
        match eval {
            EvalPoint::Delayed => self.t_start + self.tau_star * self.span,
            EvalPoint::WindowEnd => self.t_end(),
        }
    }
}

/// Fits the configured-degree polynomial to a full window.
pub fn estimate_coeffs(win: &DerivativeWindow, cfg: &DiffConfig) -> Result<LocalFit> {
    let kernel = Kernel::from_config(cfg, win.sample_period())?;
    if !win.is_full() || win.len() != kernel.len() {
        return Err(Error::WindowUnderfull { have: win.len(), need: kernel.len() });
    }
    Ok(kernel.fit(win.values(), win.t_start(), win.span()))
}

/// `(a0, a1)` of a first-degree model; `a1` is the slope.
pub fn estimate_coeffs_deg1(win: &DerivativeWindow, cfg: &DiffConfig) -> Result<(f64, f64)> {
    let fit = estimate_coeffs(win, &DiffConfig { degree: 1, ..*cfg })?;
    Ok((fit.coeffs[0], fit.coeffs[1]))
}

/// `(a0, a1, a2)` of a second-degree model; `2·a2` is the curvature.
pub fn estimate_coeffs_deg2(win: &DerivativeWindow, cfg: &DiffConfig) -> Result<(f64, f64, f64)> {
    let fit = estimate_coeffs(win, &DiffConfig { degree: 2, ..*cfg })?;
    Ok((fit.coeffs[0], fit.coeffs[1], fit.coeffs[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_of(f: impl Fn(f64) -> f64, dt: f64, cfg: &DiffConfig, t0: f64) -> DerivativeWindow {
        let mut win = DerivativeWindow::new(dt, cfg).unwrap();
        for j in 0..cfg.samples(dt) {
            let t = t0 + j as f64 * dt;
            win.push(t, f(t)).unwrap();
        }
        win
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn constant_signal() {
        let cfg = DiffConfig { window_s: 200.0, ..DiffConfig::first_derivative() };
        let win = window_of(|_| 7.5, 20.0, &cfg, 0.0);
        let (a0, a1) = estimate_coeffs_deg1(&win, &cfg).unwrap();
        assert!(rel(a0, 7.5) < 1e-12 && a1.abs() < 1e-12);
        let (b0, b1, b2) = estimate_coeffs_deg2(&win, &cfg).unwrap();
        assert!(rel(b0, 7.5) < 1e-12 && b1.abs() < 1e-12 && b2.abs() < 1e-12);
    }

    #[test]
    fn affine_signal_recovered() {
        let cfg = DiffConfig { window_s: 200.0, ..DiffConfig::first_derivative() };
        let t0 = 1000.0;
        let win = window_of(|t| 2.0 + 3.0 * (t - t0), 20.0, &cfg, t0);
        let (a0, a1) = estimate_coeffs_deg1(&win, &cfg).unwrap();
        assert!(rel(a0, 2.0) < 1e-6, "{a0}");
        assert!(rel(a1, 3.0) < 1e-6, "{a1}");
    }

    #[test]
    fn quadratic_signal_recovered() {
        let cfg = DiffConfig { window_s: 200.0, ..DiffConfig::second_derivative() };
        let t0 = 40.0;
        let win = window_of(|t| {
            let s = t - t0;
            1.0 + 2.0 * s + 3.0 * s * s
        }, 20.0, &cfg, t0);
        let (a0, a1, a2) = estimate_coeffs_deg2(&win, &cfg).unwrap();
        assert!(rel(a0, 1.0) < 1e-6 && rel(a1, 2.0) < 1e-6 && rel(a2, 3.0) < 1e-6, "{a0} {a1} {a2}");
    }

    #[test]
    fn reference_points_match_closed_form() {
        // m = 1: midpoint for both degrees; m = 2: 2/5 and 3/7.
        assert!((Kernel::new(1, 2, 31).unwrap().tau_star() - 0.5).abs() < 1e-12);
        assert!((Kernel::new(2, 2, 31).unwrap().tau_star() - 0.5).abs() < 1e-12);
        assert!((Kernel::new(1, 3, 31).unwrap().tau_star() - 0.4).abs() < 1e-12);
        assert!((Kernel::new(2, 3, 31).unwrap().tau_star() - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn higher_integral_order_still_exact() {
        let cfg = DiffConfig { window_s: 300.0, integral_order: 4, ..DiffConfig::second_derivative() };
        let win = window_of(|t| 5.0 - 0.5 * t + 0.01 * t * t, 20.0, &cfg, 0.0);
        let (a0, a1, a2) = estimate_coeffs_deg2(&win, &cfg).unwrap();
        assert!(rel(a0, 5.0) < 1e-6 && rel(a1, -0.5) < 1e-6 && rel(a2, 0.01) < 1e-6);
    }

    #[test]
    fn underfull_window_rejected() {
        let cfg = DiffConfig::first_derivative();
        let mut win = DerivativeWindow::new(20.0, &cfg).unwrap();
        win.push(0.0, 1.0).unwrap();
        assert!(matches!(estimate_coeffs(&win, &cfg), Err(Error::WindowUnderfull { .. })));
    }

    #[test]
    fn tiny_windows_are_degenerate() {
        assert!(Kernel::new(2, 2, 3).is_err());
        assert!(Kernel::new(1, 1, 10).is_err());
    }

    #[test]
    fn derivative_readout() {
        let fit = LocalFit { t_start: 10.0, span: 5.0, coeffs: vec![1.0, 2.0, 3.0], tau_star: 0.5 };
        assert_eq!(fit.value_at(12.0), 1.0 + 4.0 + 12.0);
        assert_eq!(fit.derivative_at(12.0, 1), 2.0 + 12.0);
        assert_eq!(fit.derivative_at(12.0, 2), 6.0);
        assert_eq!(fit.reference_time(EvalPoint::Delayed), 12.5);
        assert_eq!(fit.reference_time(EvalPoint::WindowEnd), 15.0);
    }
}

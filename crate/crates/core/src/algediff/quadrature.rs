use nalgebra::{DMatrix, DVector};

/// Shifted Legendre polynomials `P_0..=P_degree` evaluated at `u ∈ [0, 1]`.
fn shifted_legendre(u: f64, degree: usize) -> Vec<f64> {
    let x = 2.0 * u - 1.0;
    let mut p = Vec::with_capacity(degree + 1);
    p.push(1.0);
    if degree >= 1 {
        p.push(x);
    }
    for k in 1..degree {
        let next = ((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
        p.push(next);
    }
    p
}

/// Quadrature weights on `n` uniform nodes of `[0, 1]`.
///
/// Starts from the trapezoidal weights and applies the minimum-norm
/// correction that makes the rule exact for every polynomial of degree
/// `<= exact_degree` (capped at `n - 1`). The weights stay close to
/// trapezoidal, so the noise gain is essentially that of the trapezoidal
/// rule.
pub(crate) fn corrected_trapezoid(n: usize, exact_degree: usize) -> Vec<f64> {
    assert!(n >= 2, "quadrature needs at least two nodes");
    let h = 1.0 / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;

    let d = exact_degree.min(n - 1);
    let basis: Vec<Vec<f64>> = (0..n).map(|j| shifted_legendre(j as f64 * h, d)).collect();
    let v = DMatrix::from_fn(d + 1, n, |p, j| basis[j][p]);
    // ∫_0^1 P_p(2u - 1) du = δ_{p0}
    let mut moments = DVector::zeros(d + 1);
    moments[0] = 1.0;
    let residual = moments - &v * DVector::from_vec(w.clone());
    let gram = &v * v.transpose();
    let lambda = gram
        .lu()
        .solve(&residual)
        .expect("Legendre Gram matrix on distinct nodes is nonsingular");
    let correction = v.transpose() * lambda;
    for (wj, c) in w.iter_mut().zip(correction.iter()) {
        *wj += c;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_requested_degree() {
        for &(n, d) in &[(11, 2), (16, 4), (31, 5), (4, 6)] {
            let w = corrected_trapezoid(n, d);
            let h = 1.0 / (n - 1) as f64;
            for p in 0..=d.min(n - 1) {
                let q: f64 = w.iter().enumerate().map(|(j, wj)| wj * (j as f64 * h).powi(p as i32)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-13, "n={n} p={p} q={q}");
            }
        }
    }

    #[test]
    fn linear_exactness_leaves_trapezoid_unchanged() {
        let w = corrected_trapezoid(6, 1);
        assert!((w[0] - 0.1).abs() < 1e-15 && (w[2] - 0.2).abs() < 1e-15);
    }
}

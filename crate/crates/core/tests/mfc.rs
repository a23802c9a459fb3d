mod common;

use common::{analytic_error, exact_f_envelope, freeway_trace, settling_time, synthetic_plant_trace};

#[test]
fn analytic_law_solves_the_ode() {
    for (kp, ki) in [(40.0, 400.0), (4.0, 100.0), (30.0, 100.0)] {
        let e = |t| analytic_error(kp, ki, -5.0, t);
        let h = 1e-5;
        for t in [0.05, 0.2] {
            let d1 = (e(t + h) - e(t - h)) / (2.0 * h);
            let d2 = (e(t + h) - 2.0 * e(t) + e(t - h)) / (h * h);
            assert!((d2 + kp * d1 + ki * e(t)).abs() < 1e-3 * (1.0 + d2.abs()));
        }
        assert_eq!(e(0.0), -5.0);
        let d0 = (e(h) - e(0.0)) / h;
        assert!((d0 - 5.0 * kp).abs() < 1e-2 * kp);
    }
}

#[test]
fn exact_f_tracks_second_order_error_law() {
    for (kp, ki) in [(40.0, 400.0), (20.0, 100.0), (4.0, 100.0), (30.0, 100.0)] {
        let env = exact_f_envelope(kp, ki, 2.0);
        assert!(env < 0.01, "kp {kp} ki {ki}: envelope error {env}");
    }
}

#[test]
fn discretisation_error_shrinks_with_the_period() {
    let coarse = exact_f_envelope(40.0, 400.0, 20.0);
    let fine = exact_f_envelope(40.0, 400.0, 2.0);
    assert!(fine < coarse / 5.0, "{fine} vs {coarse}");
}

#[test]
fn estimated_f_settles_synthetic_plant() {
    let settle = settling_time(&synthetic_plant_trace(), 0.5).expect("settles");
    assert!(settle <= 10.0 / 60.0, "settled after {} min", settle * 60.0);
}

#[test]
fn estimated_f_settles_freeway_plant() {
    let trace = freeway_trace();
    assert!(trace.iter().filter(|p| p.0 > 0.8 && p.0 < 1.0).all(|p| p.1.abs() < 0.5));
    let settle = settling_time(&trace, 1.0).expect("settles");
    assert!(settle <= 10.0 / 60.0, "settled after {} min", settle * 60.0);
}

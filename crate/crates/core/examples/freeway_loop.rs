//! Drives the freeway model and the ramp controller by hand instead of
//! through the harness: a fixed demand surge, exact measurements, one
//! controller update per control period.

use rampmeter::harness::Scenario;
use rampmeter::mfc::RampController;
use rampmeter::traffic::BoundaryInput;

fn main() -> rampmeter::Result<()> {
    let sc = Scenario::surge();
    let freeway = sc.freeway()?;
    let dt_h = sc.sim_step_s / 3600.0;
    let per_control = sc.steps_per_control();
    let m = sc.geometry.merge_index;

    let mut controller = RampController::new(&sc.controller.ipi, &sc.ramp, sc.default_alpha())?;
    let mut state = freeway.equilibrium_state(3000.0, 300.0);
    let mut r = sc.ramp.r_max;
    let mut queued_h = 0.0;

    for k in 0..(3.0 / dt_h) as usize {
        let t_h = k as f64 * dt_h;
        if k % per_control == 0 {
            r = controller.update(t_h, state.rho[m], state.v[m])?.r;
        }
        let surge = (0.5..2.0).contains(&t_h);
        let input = BoundaryInput {
            upstream_demand: if surge { 3900.0 } else { 3000.0 },
            ramp_demand: if surge { 900.0 } else { 300.0 },
            downstream_density: state.rho[state.rho.len() - 1],
        };
        let (next, _) = freeway.step(&state, &input, r, dt_h)?;
        state = next;
        queued_h += (state.w + state.w_origin) * dt_h;
        if k % (900 / sc.sim_step_s as usize) == 0 {
            println!(
                "{:>5.2} h  rho_m {:>6.2}  v_m {:>6.1}  r {:.3}  ramp queue {:>6.1}",
                t_h, state.rho[m], state.v[m], r, state.w
            );
        }
    }
    println!("vehicle-hours spent queueing: {queued_h:.1}");
    Ok(())
}

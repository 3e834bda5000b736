//! Integrate the two-power flow and the nominal flow from the same initial
//! condition and print how fast each closes the distance to the optimum.

use cappa::dynamics::{CappaFlow, CappaParams, NominalPds};
use cappa::harness::config::InitDirection;
use cappa::harness::experiments::initial_state;
use cappa::integrator::{integrate, IntegratorConfig};
use cappa::problem::generate_partial_orthogonal_instance;
use cappa::solver::fista_solve;

fn main() -> cappa::Result<()> {
    let bundle = generate_partial_orthogonal_instance(24, 12, 2, 0.0, 0.05, 3)?;
    let problem = bundle.problem.with_gram();
    let reference = fista_solve(&problem, 1e-12, 1_000_000)?;
    let x_ref = reference.x_ref;
    let x_ref_norm = x_ref.dot(&x_ref).sqrt();
    let x0 = initial_state(&problem, InitDirection::Gaussian, 11, 2.0 * x_ref_norm);

    let params = CappaParams {
        kappa1: 5.0,
        kappa2: 5.0,
        eta: 0.1,
        ..CappaParams::default()
    };
    let settle_tol = 1e-2 * x_ref_norm;
    let mut cfg = IntegratorConfig::new(1e-3, 2000.0);
    cfg.stop_on_settle = true;
    cfg.record_stride = 100;

    let flow = CappaFlow::new(&problem, params);
    let traj = integrate(&flow, &x0.view(), &cfg, Some(&x_ref.view()), Some(settle_tol))?;
    println!(
        "two-power flow: settled at t = {:?} after {} steps",
        traj.settle_time, traj.steps_taken
    );

    let pds = NominalPds {
        problem: &problem,
        eta: params.eta,
    };
    let traj = integrate(&pds, &x0.view(), &cfg, Some(&x_ref.view()), Some(settle_tol))?;
    println!(
        "nominal flow:   settled at t = {:?} after {} steps",
        traj.settle_time, traj.steps_taken
    );
    Ok(())
}

//! Measure settling times over initial norms spanning three orders of
//! magnitude. With exponents chosen from the contraction constant, the
//! settling time of the two-power flow is nearly independent of the initial
//! norm, while the nominal flow slows down with distance.

use cappa::analysis::{derive_constants, DeltaMode};
use cappa::dynamics::{CappaFlow, CappaParams, NominalPds};
use cappa::harness::config::InitDirection;
use cappa::harness::experiments::initial_state;
use cappa::integrator::{settle_time_sweep, IntegratorConfig};
use cappa::problem::generate_partial_orthogonal_instance;
use cappa::solver::fista_solve;

fn main() -> cappa::Result<()> {
    let bundle = generate_partial_orthogonal_instance(20, 15, 2, 0.0, 0.05, 1)?;
    let problem = bundle.problem.with_gram();
    let probe = derive_constants(
        &problem.phi().view(),
        2,
        1e-6,
        50.0,
        50.0,
        0.5,
        1.1,
        DeltaMode::ExactBruteforce,
    )?;
    let eta = 0.5 * probe.eta_max;
    let probe = derive_constants(
        &problem.phi().view(),
        2,
        eta,
        50.0,
        50.0,
        0.5,
        1.1,
        DeltaMode::ExactBruteforce,
    )?;
    let alpha1 = 1.0 - 0.5 * probe.epsilon_c;
    let constants = derive_constants(
        &problem.phi().view(),
        2,
        eta,
        50.0,
        50.0,
        alpha1,
        1.1,
        DeltaMode::ExactBruteforce,
    )?;
    println!(
        "c = {:.6}, alpha1 = {:.6}, settle bound = {:?}",
        constants.c, alpha1, constants.settle_bound
    );

    let reference = fista_solve(&problem, 1e-12, 1_000_000)?;
    let x_ref = reference.x_ref;
    let x_ref_norm = x_ref.dot(&x_ref).sqrt();
    let settle_tol = 1e-3 * x_ref_norm;
    let initials: Vec<_> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .enumerate()
        .map(|(i, &scale)| {
            initial_state(
                &problem,
                InitDirection::Rowspace,
                201 + i as u64,
                scale * x_ref_norm,
            )
        })
        .collect();

    let params = CappaParams {
        kappa1: 50.0,
        kappa2: 50.0,
        alpha1,
        alpha2: 1.1,
        eta,
    };
    let mut cfg = IntegratorConfig::new(1e-3, 10.0);
    cfg.stop_on_settle = true;
    cfg.record_stride = 100;
    let flow = CappaFlow::new(&problem, params);
    println!("two-power flow:");
    for s in settle_time_sweep(&flow, &initials, &cfg, &x_ref.view(), settle_tol)? {
        println!(
            "  from norm {:>10.3e}: settle {:?}",
            s.initial_norm, s.settle_time
        );
    }

    let pds = NominalPds {
        problem: &problem,
        eta,
    };
    cfg.t_max = 4000.0;
    cfg.record_stride = 1000;
    println!("nominal flow:");
    for s in settle_time_sweep(&pds, &initials, &cfg, &x_ref.view(), settle_tol)? {
        println!(
            "  from norm {:>10.3e}: settle {:?}",
            s.initial_norm, s.settle_time
        );
    }
    Ok(())
}

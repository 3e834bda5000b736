//! Final error of the explicitly discretized two-power flow as a function of
//! the step size. The fractional-power field is not Lipschitz at the
//! equilibrium, so forward Euler chatters at a floor that scales like
//! (dt * kappa)^(1 / (1 - alpha1)).

use cappa::dynamics::{CappaFlow, CappaParams};
use cappa::integrator::{integrate, IntegratorConfig};
use cappa::problem::generate_partial_orthogonal_instance;
use cappa::solver::fista_solve;
use ndarray::Array1;

fn main() -> cappa::Result<()> {
    let bundle = generate_partial_orthogonal_instance(24, 12, 2, 0.0, 0.05, 3)?;
    let problem = bundle.problem.with_gram();
    let reference = fista_solve(&problem, 1e-12, 1_000_000)?;
    let x_ref = reference.x_ref;

    let params = CappaParams {
        kappa1: 5.0,
        kappa2: 5.0,
        eta: 0.03,
        ..CappaParams::default()
    };
    let flow = CappaFlow::new(&problem, params);
    let x0 = Array1::zeros(problem.n());
    println!("dt        final error   predicted floor scale");
    for dt in [1e-2, 1e-3, 1e-4] {
        let mut cfg = IntegratorConfig::new(dt, 10.0);
        cfg.record_stride = u64::MAX;
        let traj = integrate(&flow, &x0.view(), &cfg, Some(&x_ref.view()), None)?;
        let err = traj.error_to_ref.as_ref().unwrap().last().copied().unwrap();
        let floor = (dt * params.kappa1).powf(1.0 / (1.0 - params.alpha1));
        println!("{dt:.0e}     {err:.4e}    {floor:.4e}");
    }
    Ok(())
}

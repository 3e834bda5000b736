//! Derive every convergence-certificate constant for a small instance with an
//! exact RIP enumeration, and show the settling-time bound.

use cappa::analysis::{derive_constants, DeltaMode};
use cappa::problem::generate_partial_orthogonal_instance;

fn main() -> cappa::Result<()> {
    let bundle = generate_partial_orthogonal_instance(20, 15, 2, 0.0, 0.05, 1)?;
    let phi = bundle.problem.phi();

    // first pass gets the admissible step interval, second pass uses its midpoint
    let probe = derive_constants(&phi.view(), 2, 1e-6, 50.0, 50.0, 0.5, 1.1, DeltaMode::ExactBruteforce)?;
    let eta = 0.5 * probe.eta_max;
    // the first exponent must sit inside (1 - epsilon(c), 1) for the bound
    let c = derive_constants(&phi.view(), 2, eta, 50.0, 50.0, 0.5, 1.1, DeltaMode::ExactBruteforce)?;
    let alpha1 = 1.0 - 0.5 * c.epsilon_c;
    let c = derive_constants(&phi.view(), 2, eta, 50.0, 50.0, alpha1, 1.1, DeltaMode::ExactBruteforce)?;

    println!("delta_2s      = {:.6} (certified: {})", c.delta_2s, c.delta_source.is_certified());
    println!("mu            = {:.6}", c.mu);
    println!("L             = {:.6}", c.lipschitz);
    println!("eta interval  = (0, {:.6}), using {:.6}", c.eta_max, c.eta);
    println!("contraction c = {:.6}", c.c);
    println!("epsilon(c)    = {:.6}", c.epsilon_c);
    println!("alpha1        = {:.6} (inside (1 - epsilon, 1))", c.alpha1);
    match c.settle_bound {
        Some(b) => println!("settle bound  = {b:.3} time units, uniform over all initial conditions"),
        None => println!("settle bound  = unavailable for these exponents"),
    }
    Ok(())
}

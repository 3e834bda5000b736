//! Generate a synthetic sparse-recovery instance, save it, reload it, and
//! solve it to high precision.

use cappa::problem::{generate_gaussian_instance, load_bundle, save_bundle};
use cappa::prox::DEFAULT_ZERO_TOL;
use cappa::solver::fista_solve;

fn main() -> cappa::Result<()> {
    let bundle = generate_gaussian_instance(100, 50, 5, 0.01, 0.05, 7)?;
    let path = std::env::temp_dir().join("cappa_example_instance.bin");
    save_bundle(&bundle, &path)?;
    let bundle = load_bundle(&path)?;
    println!(
        "instance: {}x{} with {} planted nonzeros, saved to {}",
        bundle.problem.m(),
        bundle.problem.n(),
        bundle.truth.as_ref().map(|t| t.s).unwrap_or(0),
        path.display()
    );

    let problem = bundle.problem.with_gram();
    let sol = fista_solve(&problem, 1e-10, 1_000_000)?;
    let nnz = sol
        .x_ref
        .iter()
        .filter(|v| v.abs() > DEFAULT_ZERO_TOL)
        .count();
    println!(
        "solved in {} iterations: kkt residual {:.3e}, objective {:.6}, {} nonzeros",
        sol.iterations, sol.kkt_residual, sol.objective, nnz
    );
    Ok(())
}

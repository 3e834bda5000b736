//! Wall-clock benchmark over randomized trials: every solver runs to the same
//! error-to-reference stopping criterion and reports min/mean/max times.

use cappa::harness::experiments::run_wallclock_trials;
use cappa::harness::ExperimentConfig;

fn main() -> cappa::Result<()> {
    let cfg = ExperimentConfig::from_toml(
        r#"
        master_seed = 2
        trials = 10
        solvers = ["cappa", "pds", "fista"]
        init_conditions = [{ direction_seed = 1, norm_scale = 1.0 }]
        settle_tol_rel = 1e-2

        [instance]
        n = 48
        m = 24
        s = 4
        sigma = 0.0
        lambda = 0.05
        matrix = "partial_orthogonal"

        [cappa]
        eta = 0.03
        kappa1 = 5.0
        kappa2 = 5.0

        [integrator]
        dt = 1e-3
        t_max = 400.0

        [constants]
        delta_mode = "surrogate"
        surrogate_samples = 200
        "#,
    )?;
    let out = std::env::temp_dir().join("cappa_example_bench");
    let report = run_wallclock_trials(&cfg, &out)?;
    for t in &report.summaries {
        println!(
            "{:>7}: {}/{} converged, wall clock min {:.4}s mean {:.4}s max {:.4}s",
            t.solver.label(),
            t.converged,
            t.total,
            t.min_ns as f64 * 1e-9,
            t.mean_ns * 1e-9,
            t.max_ns as f64 * 1e-9
        );
    }
    println!("artifacts: {} and {}", report.csv_path.display(), report.svg_path.display());
    Ok(())
}

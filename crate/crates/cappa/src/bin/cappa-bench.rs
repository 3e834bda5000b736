//! Command-line benchmark harness. All heavy lifting lives in the library;
//! this binary parses flags, wires the config, and maps errors to exit codes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cappa::error::CappaError;
use cappa::harness::config::ExperimentConfig;
use cappa::harness::experiments::{
    compute_constants, report_constants, run_dt_sweep, run_error_decay, run_signal_recovery,
    run_size_sweep, run_wallclock_trials,
};
use cappa::harness::csvout::CsvTable;
use cappa::harness::manifest::RunManifest;
use cappa::problem::save_bundle;
use cappa::prox::DEFAULT_ZERO_TOL;
use cappa::solver::fista_solve;

#[derive(Parser)]
#[command(
    name = "cappa-bench",
    about = "Sparse-recovery benchmark harness for continuous-time proximal flows",
    version
)]
struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for trials and sweeps; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Output directory for CSV/SVG artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Strip any nondeterministic content from emitted artifacts. This is
    /// already the default; the flag exists so scripts can state it.
    #[arg(long, global = true, default_value_t = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem instance and save it as a binary bundle.
    Generate,
    /// Solve the configured instance to high precision and write the solution.
    Solve,
    /// Error-decay curves for every solver and initial condition.
    FigErrorDecay,
    /// Terminal state against the reference optimum and the planted signal.
    FigRecovery,
    /// Wall-clock benchmark over randomized trials.
    BenchTrials,
    /// Wall-clock benchmark over problem sizes.
    BenchSize,
    /// Error decay across discretization steps.
    BenchDt,
    /// Report every derived constant with provenance.
    Constants {
        /// Fail unless the constants are backed by an exact RIP enumeration.
        #[arg(long)]
        require_certified: bool,
    },
}

fn exit_code_for(err: &CappaError) -> u8 {
    match err {
        CappaError::Divergence { .. } => 3,
        CappaError::NotCertified(_) => 4,
        _ => 2,
    }
}

fn load_config(cli: &Cli) -> cappa::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> cappa::Result<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CappaError::InvalidConfig(format!("thread pool setup failed: {e}")))?;
    }
    let cfg = load_config(cli)?;
    let out = &cli.out;
    match &cli.command {
        Command::Generate => {
            let bundle = cfg.instance.realize(cfg.master_seed)?;
            std::fs::create_dir_all(out)?;
            let path = out.join("instance.bin");
            save_bundle(&bundle, &path)?;
            println!(
                "wrote {} ({}x{}, seed {})",
                path.display(),
                bundle.problem.m(),
                bundle.problem.n(),
                cfg.master_seed
            );
        }
        Command::Solve => {
            let bundle = cfg.instance.realize(cfg.master_seed)?;
            let problem = bundle.problem.with_gram();
            let sol = fista_solve(&problem, cfg.reference.tol, cfg.reference.max_iter)?;
            let nnz = sol
                .x_ref
                .iter()
                .filter(|v| v.abs() > DEFAULT_ZERO_TOL)
                .count();
            let mut table = CsvTable::new(&["index", "x_ref"]);
            table.note("experiment", "solve");
            table.note("kkt_residual", format!("{:.16e}", sol.kkt_residual));
            table.note("objective", format!("{:.16e}", sol.objective));
            table.note("iterations", sol.iterations.to_string());
            table.note("converged", sol.converged.to_string());
            for (i, v) in sol.x_ref.iter().enumerate() {
                table.push(vec![i.into(), (*v).into()]);
            }
            let manifest = RunManifest::new(cfg.to_toml(), vec![cfg.master_seed]);
            let path = out.join("solution.csv");
            table.write(&manifest, &path)?;
            println!(
                "solved: kkt residual {:.3e}, {} iterations, {} nonzeros, converged: {}",
                sol.kkt_residual, sol.iterations, nnz, sol.converged
            );
            println!("wrote {}", path.display());
        }
        Command::FigErrorDecay => {
            let r = run_error_decay(&cfg, out)?;
            for s in &r.series {
                println!(
                    "{:>7} init_norm {:>12.5e}: settle {} final error {:.5e}{}",
                    s.solver.label(),
                    s.init_norm,
                    s.settle_time
                        .map(|t| format!("{t:.4}"))
                        .unwrap_or_else(|| "none".into()),
                    s.final_error,
                    if s.diverged { " [diverged]" } else { "" }
                );
            }
            println!("wrote {} and {}", r.csv_path.display(), r.svg_path.display());
        }
        Command::FigRecovery => {
            let r = run_signal_recovery(&cfg, out)?;
            println!(
                "supports: flow {} reference {} truth {}; max |x - x_ref| = {:.5e}",
                r.support_cappa, r.support_ref, r.support_true, r.max_abs_diff_to_ref
            );
            println!("wrote {} and {}", r.csv_path.display(), r.svg_path.display());
        }
        Command::BenchTrials => {
            let r = run_wallclock_trials(&cfg, out)?;
            for t in &r.summaries {
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
            println!("wrote {} and {}", r.csv_path.display(), r.svg_path.display());
        }
        Command::BenchSize => {
            let r = run_size_sweep(&cfg, out)?;
            for (n, m, s, summaries) in &r.points {
                for t in summaries {
                    println!(
                        "n={n} m={m} s={s} {:>7}: mean {:.4}s over {}/{} converged",
                        t.solver.label(),
                        t.mean_ns * 1e-9,
                        t.converged,
                        t.total
                    );
                }
            }
            println!("wrote {} and {}", r.csv_path.display(), r.svg_path.display());
        }
        Command::BenchDt => {
            let r = run_dt_sweep(&cfg, out)?;
            for (dt, final_error, degenerate) in &r.finals {
                println!(
                    "dt {dt:.1e}: final error {final_error:.5e}{}",
                    if *degenerate { " [degenerate single step]" } else { "" }
                );
            }
            println!("wrote {} and {}", r.csv_path.display(), r.svg_path.display());
        }
        Command::Constants { require_certified } => {
            if *require_certified {
                let bundle = cfg.instance.realize(cfg.master_seed)?;
                let outcome = compute_constants(&cfg, &bundle)?;
                if !outcome.delta_source.is_certified() {
                    return Err(CappaError::NotCertified(
                        "RIP constant is a sampled lower bound; exact enumeration is infeasible or not configured for this instance"
                            .into(),
                    ));
                }
            }
            let report = report_constants(&cfg)?;
            print!("{report}");
            std::fs::create_dir_all(out)?;
            let path = out.join("constants.txt");
            std::fs::write(&path, &report)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

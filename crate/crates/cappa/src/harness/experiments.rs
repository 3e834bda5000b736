//! Experiment drivers: error-decay curves, signal recovery, wall-clock
//! benchmark trials, size and step-size sweeps, and the constants report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis::{
    derive_constants_from_delta, rip_constant_bruteforce, rip_constant_surrogate, spectral_norm,
    DeltaSource, TheoryConstants,
};
use crate::dynamics::{CappaFlow, Dynamics, LcaFlow, NominalPds};
use crate::error::{CappaError, Result};
use crate::harness::config::{
    DeltaModeName, ExperimentConfig, InitDirection, SolverKind,
};
use crate::harness::csvout::CsvTable;
use crate::harness::manifest::{constants_report, RunManifest};
use crate::harness::svg::{line_plot, stem_plot, write_svg, Series, YScale};
use crate::integrator::{integrate, IntegratorConfig, Trajectory};
use crate::problem::{ProblemBundle, SparseProblem};
use crate::prox::DEFAULT_ZERO_TOL;
use crate::solver::fista_solve;

/// Constants pipeline outcome: the RIP estimate always exists, the derived
/// constants only when `delta_2s < 1` and `eta` is admissible.
#[derive(Debug, Clone)]
pub struct ConstantsOutcome {
    pub delta_2s: f64,
    pub delta_source: DeltaSource,
    pub constants: Option<TheoryConstants>,
    /// Why the derived constants are unavailable, when they are.
    pub failure: Option<String>,
}

/// Compute the RIP estimate per the configured mode (auto falls back to the
/// sampled surrogate when enumeration is infeasible) and derive what can be
/// derived.
pub fn compute_constants(cfg: &ExperimentConfig, bundle: &ProblemBundle) -> Result<ConstantsOutcome> {
    let phi = bundle.problem.phi();
    let s = bundle
        .truth
        .as_ref()
        .map(|t| t.s)
        .unwrap_or(cfg.instance.s);
    let samples = cfg.constants.surrogate_samples;
    let seed = cfg.master_seed;
    let (delta_2s, delta_source) = match cfg.constants.delta_mode {
        DeltaModeName::Exact => (
            rip_constant_bruteforce(&phi.view(), 2 * s)?,
            DeltaSource::ExactBruteforce,
        ),
        DeltaModeName::Surrogate => (
            rip_constant_surrogate(&phi.view(), 2 * s, samples, seed)?,
            DeltaSource::SurrogateBound,
        ),
        DeltaModeName::Auto => match rip_constant_bruteforce(&phi.view(), 2 * s) {
            Ok(d) => (d, DeltaSource::ExactBruteforce),
            Err(CappaError::Capacity { .. }) => (
                rip_constant_surrogate(&phi.view(), 2 * s, samples, seed)?,
                DeltaSource::SurrogateBound,
            ),
            Err(e) => return Err(e),
        },
    };
    let p = cfg.cappa;
    match derive_constants_from_delta(
        delta_2s,
        spectral_norm(&phi.view()),
        p.eta,
        p.kappa1,
        p.kappa2,
        p.alpha1,
        p.alpha2,
        delta_source,
    ) {
        Ok(c) => Ok(ConstantsOutcome {
            delta_2s,
            delta_source,
            constants: Some(c),
            failure: None,
        }),
        Err(CappaError::InvalidConfig(reason)) => Ok(ConstantsOutcome {
            delta_2s,
            delta_source,
            constants: None,
            failure: Some(reason),
        }),
        Err(e) => Err(e),
    }
}

impl ConstantsOutcome {
    pub fn report_fields(&self) -> Vec<(String, String)> {
        match &self.constants {
            Some(c) => constants_report(c),
            None => vec![
                ("delta_2s".into(), format!("{:.16e}", self.delta_2s)),
                (
                    "delta_source".into(),
                    if self.delta_source.is_certified() {
                        "exact_bruteforce".into()
                    } else {
                        "surrogate_bound".into()
                    },
                ),
                (
                    "certified".into(),
                    if self.delta_source.is_certified() {
                        "true".into()
                    } else {
                        "false".into()
                    },
                ),
                (
                    "constants_unavailable".into(),
                    self.failure.clone().unwrap_or_default(),
                ),
            ],
        }
    }
}

fn direction(problem: &SparseProblem, kind: InitDirection, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = match kind {
        InitDirection::Gaussian => Array1::from_iter(
            (0..problem.n()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        ),
        InitDirection::Rowspace => {
            let g = Array1::from_iter(
                (0..problem.m()).map(|_| rng.sample::<f64, _>(StandardNormal)),
            );
            problem.phi().t().dot(&g)
        }
    };
    let norm = d.dot(&d).sqrt();
    d / norm
}

pub fn initial_state(
    problem: &SparseProblem,
    kind: InitDirection,
    seed: u64,
    norm: f64,
) -> Array1<f64> {
    direction(problem, kind, seed) * norm
}

enum Flow<'a> {
    Cappa(CappaFlow<'a>),
    Pds(NominalPds<'a>),
    Lca(LcaFlow<'a>),
}

impl<'a> Flow<'a> {
    fn build(cfg: &ExperimentConfig, problem: &'a SparseProblem, kind: SolverKind) -> Option<Self> {
        match kind {
            SolverKind::Cappa => Some(Flow::Cappa(CappaFlow::new(problem, cfg.cappa.params()))),
            SolverKind::Pds => Some(Flow::Pds(NominalPds {
                problem,
                eta: cfg.cappa.eta,
            })),
            SolverKind::Lca => Some(Flow::Lca(LcaFlow::new(
                problem,
                cfg.lca.params(problem.lambda()),
                false,
            ))),
            SolverKind::FtLca => Some(Flow::Lca(LcaFlow::new(
                problem,
                cfg.lca.params(problem.lambda()),
                true,
            ))),
            SolverKind::Fista => None,
        }
    }

    fn dynamics(&self) -> &dyn Dynamics {
        match self {
            Flow::Cappa(f) => f,
            Flow::Pds(f) => f,
            Flow::Lca(f) => f,
        }
    }
}

/// Run to completion; a divergence is downgraded to the finite prefix of the
/// trajectory plus a flag, so one diverging run cannot abort a whole figure.
fn integrate_captured(
    dynamics: &dyn Dynamics,
    x0: &Array1<f64>,
    config: &IntegratorConfig,
    x_ref: Option<&Array1<f64>>,
    settle_tol: Option<f64>,
) -> Result<(Trajectory, bool)> {
    let xr = x_ref.map(|r| r.view());
    match integrate(dynamics, &x0.view(), config, xr.as_ref(), settle_tol) {
        Ok(t) => Ok((t, false)),
        Err(CappaError::Divergence { step, .. }) => {
            // replay the finite prefix
            let mut truncated = *config;
            truncated.t_max = ((step.saturating_sub(1)).max(1) as f64) * config.dt;
            let t = integrate(dynamics, &x0.view(), &truncated, xr.as_ref(), settle_tol)?;
            Ok((t, true))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct SeriesSummary {
    pub solver: SolverKind,
    pub init_norm: f64,
    pub settle_time: Option<f64>,
    pub final_error: f64,
    pub diverged: bool,
}

#[derive(Debug)]
pub struct ErrorDecayReport {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub x_ref_norm: f64,
    pub settle_tol: f64,
    pub series: Vec<SeriesSummary>,
}

/// Error-decay curves: every flow from every initial condition against the
/// reference optimum.
pub fn run_error_decay(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ErrorDecayReport> {
    let bundle = cfg.instance.realize(cfg.master_seed)?;
    let problem = bundle.problem.with_gram();
    let reference = fista_solve(&problem, cfg.reference.tol, cfg.reference.max_iter)?;
    let x_ref = reference.x_ref;
    let x_ref_norm = x_ref.dot(&x_ref).sqrt();
    let settle_tol = cfg.settle_tol_rel * x_ref_norm;
    let icfg = cfg.integrator.build();

    let flows: Vec<SolverKind> = cfg
        .solvers
        .iter()
        .copied()
        .filter(|s| *s != SolverKind::Fista)
        .collect();
    let jobs: Vec<(SolverKind, u64, f64)> = flows
        .iter()
        .flat_map(|&s| {
            cfg.init_conditions
                .iter()
                .map(move |ic| (s, ic.direction_seed, ic.norm_scale))
        })
        .collect();

    let results: Vec<(SolverKind, f64, Trajectory, bool)> = jobs
        .par_iter()
        .map(|&(solver, seed, scale)| {
            let flow = Flow::build(cfg, &problem, solver).expect("fista filtered out");
            let norm = scale * x_ref_norm;
            let x0 = initial_state(&problem, cfg.init_direction, seed, norm);
            let (traj, diverged) =
                integrate_captured(flow.dynamics(), &x0, &icfg, Some(&x_ref), Some(settle_tol))?;
            Ok((solver, norm, traj, diverged))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = CsvTable::new(&[
        "solver",
        "init_norm",
        "t",
        "error",
        "residual",
        "lyapunov",
        "diverged",
    ]);
    table.note("experiment", "error_decay");
    table.note("settle_tol", format!("{settle_tol:.16e}"));
    table.note("x_ref_norm", format!("{x_ref_norm:.16e}"));
    let mut plot_series = Vec::new();
    let mut summaries = Vec::new();
    for (solver, norm, traj, diverged) in &results {
        let errors = traj.error_to_ref.as_ref().expect("reference supplied");
        for i in 0..traj.times.len() {
            table.push(vec![
                solver.label().into(),
                (*norm).into(),
                traj.times[i].into(),
                errors[i].into(),
                traj.residuals[i].into(),
                (0.5 * traj.residuals[i] * traj.residuals[i]).into(),
                (*diverged).into(),
            ]);
        }
        plot_series.push(Series {
            label: format!("{}@{:.0e}", solver.label(), norm),
            x: traj.times.clone(),
            y: errors.clone(),
        });
        summaries.push(SeriesSummary {
            solver: *solver,
            init_norm: *norm,
            settle_time: traj.settle_time,
            final_error: *errors.last().expect("nonempty trajectory"),
            diverged: *diverged,
        });
    }

    let seeds: Vec<u64> = cfg.init_conditions.iter().map(|c| c.direction_seed).collect();
    let manifest = RunManifest::new(cfg.to_toml(), seeds);
    let csv_path = out_dir.join("error_decay.csv");
    table.write(&manifest, &csv_path)?;
    let svg = line_plot(
        &plot_series,
        "error to reference vs time",
        "t",
        "||x(t) - x_ref||",
        YScale::Log,
    )?;
    let svg_path = out_dir.join("error_decay.svg");
    write_svg(&svg, &svg_path)?;
    Ok(ErrorDecayReport {
        csv_path,
        svg_path,
        x_ref_norm,
        settle_tol,
        series: summaries,
    })
}

#[derive(Debug)]
pub struct RecoveryReport {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub support_cappa: usize,
    pub support_ref: usize,
    pub support_true: usize,
    pub max_abs_diff_to_ref: f64,
    pub terminal: Array1<f64>,
    /// Prox image of the terminal state; carries the exact zeros.
    pub sparse: Array1<f64>,
    pub x_ref: Array1<f64>,
}

/// Terminal state of the flow against the reference optimum and the planted
/// signal, per index.
pub fn run_signal_recovery(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RecoveryReport> {
    let bundle = cfg.instance.realize(cfg.master_seed)?;
    let truth = bundle.truth.as_ref().ok_or_else(|| {
        CappaError::InvalidArgument("signal recovery requires an instance with ground truth".into())
    })?;
    let problem = bundle.problem.with_gram();
    let reference = fista_solve(&problem, cfg.reference.tol, cfg.reference.max_iter)?;
    let x_ref = reference.x_ref;
    let icfg = cfg.integrator.build();
    let flow = CappaFlow::new(&problem, cfg.cappa.params());
    let x0 = Array1::zeros(problem.n());
    let traj = integrate(&flow, &x0.view(), &icfg, Some(&x_ref.view()), None)?;
    let terminal = traj.final_state().clone();
    // sparse readout: explicit discretization leaves chatter of order
    // (dt kappa)^(1/(1-alpha1)) on every coordinate, so exact zeros live in
    // the prox image of the state, not the state itself
    let sparse = crate::prox::prox_step(&problem, &terminal.view(), cfg.cappa.eta)?.z;

    let support = |v: &Array1<f64>| v.iter().filter(|x| x.abs() > DEFAULT_ZERO_TOL).count();
    let support_cappa = support(&sparse);
    let support_ref = support(&x_ref);
    let support_true = support(&truth.x_true);
    let max_abs_diff_to_ref = terminal
        .iter()
        .zip(x_ref.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    let mut table = CsvTable::new(&["index", "x_cappa", "x_cappa_sparse", "x_ref", "x_true"]);
    table.note("experiment", "signal_recovery");
    table.note("zero_tol", format!("{DEFAULT_ZERO_TOL:.16e}"));
    table.note("support_cappa", support_cappa.to_string());
    table.note("support_cappa_raw", support(&terminal).to_string());
    table.note("support_ref", support_ref.to_string());
    table.note("support_true", support_true.to_string());
    for i in 0..problem.n() {
        table.push(vec![
            i.into(),
            terminal[i].into(),
            sparse[i].into(),
            x_ref[i].into(),
            truth.x_true[i].into(),
        ]);
    }
    let manifest = RunManifest::new(cfg.to_toml(), vec![cfg.master_seed]);
    let csv_path = out_dir.join("signal_recovery.csv");
    table.write(&manifest, &csv_path)?;

    let idx: Vec<f64> = (0..problem.n()).map(|i| i as f64).collect();
    let svg = stem_plot(
        &[
            Series {
                label: "x_true".into(),
                x: idx.clone(),
                y: truth.x_true.to_vec(),
            },
            Series {
                label: "x_ref".into(),
                x: idx.clone(),
                y: x_ref.to_vec(),
            },
            Series {
                label: "x_cappa".into(),
                x: idx,
                y: terminal.to_vec(),
            },
        ],
        "recovered signal",
        "index",
        "value",
    )?;
    let svg_path = out_dir.join("signal_recovery.svg");
    write_svg(&svg, &svg_path)?;
    Ok(RecoveryReport {
        csv_path,
        svg_path,
        support_cappa,
        support_ref,
        support_true,
        max_abs_diff_to_ref,
        terminal,
        sparse,
        x_ref,
    })
}

#[derive(Debug, Clone)]
struct TrialResult {
    solver: SolverKind,
    trial: usize,
    seed: u64,
    converged: bool,
    time_to_threshold: f64,
    wall_clock_ns: u128,
    steps: u64,
}

#[derive(Debug, Clone)]
pub struct SolverTiming {
    pub solver: SolverKind,
    pub total: usize,
    pub converged: usize,
    pub min_ns: u128,
    pub mean_ns: f64,
    pub max_ns: u128,
}

#[derive(Debug)]
pub struct TrialsReport {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub summaries: Vec<SolverTiming>,
}

fn run_trials_on(
    cfg: &ExperimentConfig,
    n: usize,
    m: usize,
    s: usize,
    trials: usize,
) -> Result<(Vec<TrialResult>, Vec<u64>)> {
    let mut seed_rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    // two sub-seeds per trial: instance and initial condition
    let seeds: Vec<(u64, u64)> = (0..trials)
        .map(|_| (seed_rng.gen::<u64>(), seed_rng.gen::<u64>()))
        .collect();
    let norm_scale = cfg
        .init_conditions
        .first()
        .map(|c| c.norm_scale)
        .unwrap_or(1.0);
    let mut icfg = cfg.integrator.build();
    icfg.stop_on_settle = true;
    icfg.record_stride = u64::MAX;

    let results: Vec<Vec<TrialResult>> = seeds
        .par_iter()
        .enumerate()
        .map(|(trial, &(instance_seed, init_seed))| {
            let mut inst = cfg.instance.clone();
            inst.n = n;
            inst.m = m;
            inst.s = s;
            inst.path = None;
            let bundle = inst.realize(instance_seed)?;
            let problem = bundle.problem.with_gram();
            let started = Instant::now();
            let reference = fista_solve(&problem, cfg.reference.tol, cfg.reference.max_iter)?;
            let fista_ns = started.elapsed().as_nanos();
            let x_ref = reference.x_ref;
            let x_ref_norm = x_ref.dot(&x_ref).sqrt();
            let settle_tol = cfg.settle_tol_rel * x_ref_norm;
            let x0 = initial_state(&problem, cfg.init_direction, init_seed, norm_scale * x_ref_norm);
            let mut rows = Vec::new();
            for &solver in &cfg.solvers {
                let row = match Flow::build(cfg, &problem, solver) {
                    Some(flow) => {
                        match integrate(
                            flow.dynamics(),
                            &x0.view(),
                            &icfg,
                            Some(&x_ref.view()),
                            Some(settle_tol),
                        ) {
                            Ok(traj) => TrialResult {
                                solver,
                                trial,
                                seed: instance_seed,
                                converged: traj.converged,
                                time_to_threshold: traj.steps_taken as f64 * icfg.dt,
                                wall_clock_ns: traj.wall_clock_ns,
                                steps: traj.steps_taken,
                            },
                            // a diverging trial is a non-converged trial
                            Err(CappaError::Divergence { step, .. }) => TrialResult {
                                solver,
                                trial,
                                seed: instance_seed,
                                converged: false,
                                time_to_threshold: f64::NAN,
                                wall_clock_ns: 0,
                                steps: step,
                            },
                            Err(e) => return Err(e),
                        }
                    }
                    None => TrialResult {
                        solver,
                        trial,
                        seed: instance_seed,
                        converged: reference.converged,
                        time_to_threshold: f64::NAN,
                        wall_clock_ns: fista_ns,
                        steps: reference.iterations,
                    },
                };
                rows.push(row);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        results.into_iter().flatten().collect(),
        seeds.iter().flat_map(|&(a, b)| [a, b]).collect(),
    ))
}

fn summarize(cfg: &ExperimentConfig, rows: &[TrialResult]) -> Vec<SolverTiming> {
    cfg.solvers
        .iter()
        .map(|&solver| {
            let of_solver: Vec<&TrialResult> =
                rows.iter().filter(|r| r.solver == solver).collect();
            let converged: Vec<&&TrialResult> =
                of_solver.iter().filter(|r| r.converged).collect();
            let min_ns = converged.iter().map(|r| r.wall_clock_ns).min().unwrap_or(0);
            let max_ns = converged.iter().map(|r| r.wall_clock_ns).max().unwrap_or(0);
            let mean_ns = if converged.is_empty() {
                f64::NAN
            } else {
                converged.iter().map(|r| r.wall_clock_ns as f64).sum::<f64>()
                    / converged.len() as f64
            };
            SolverTiming {
                solver,
                total: of_solver.len(),
                converged: converged.len(),
                min_ns,
                mean_ns,
                max_ns,
            }
        })
        .collect()
}

/// Wall-clock benchmark: `trials` independent instances and initializations
/// per solver, all run to the shared error-to-reference stopping criterion.
pub fn run_wallclock_trials(cfg: &ExperimentConfig, out_dir: &Path) -> Result<TrialsReport> {
    if cfg.trials < 2 {
        return Err(CappaError::InvalidConfig(
            "wall-clock benchmark needs at least 2 trials".into(),
        ));
    }
    let (rows, seeds) = run_trials_on(cfg, cfg.instance.n, cfg.instance.m, cfg.instance.s, cfg.trials)?;
    let summaries = summarize(cfg, &rows);

    let mut table = CsvTable::new(&[
        "solver",
        "kind",
        "trial",
        "seed",
        "converged",
        "time_to_threshold",
        "wall_clock_ns",
        "steps",
    ]);
    table.note("experiment", "wallclock_trials");
    table.note(
        "summary_rows",
        "kind in {min,mean,max}: trial = converged count, seed = total count; non-converged trials excluded",
    );
    for r in &rows {
        table.push(vec![
            r.solver.label().into(),
            "trial".into(),
            (r.trial as i64).into(),
            r.seed.into(),
            r.converged.into(),
            r.time_to_threshold.into(),
            r.wall_clock_ns.into(),
            r.steps.into(),
        ]);
    }
    for s in &summaries {
        for (kind, ns) in [
            ("min", s.min_ns as f64),
            ("mean", s.mean_ns),
            ("max", s.max_ns as f64),
        ] {
            table.push(vec![
                s.solver.label().into(),
                kind.into(),
                (s.converged as i64).into(),
                (s.total as u64).into(),
                (s.converged == s.total).into(),
                f64::NAN.into(),
                ns.into(),
                0u64.into(),
            ]);
        }
    }

    let bundle = cfg.instance.realize(cfg.master_seed)?;
    let constants = compute_constants(cfg, &bundle)?;
    let mut manifest = RunManifest::new(cfg.to_toml(), seeds);
    manifest.constants = constants.report_fields();
    manifest.wall_clock_ns = rows.iter().map(|r| r.wall_clock_ns).collect();
    let csv_path = out_dir.join("bench_trials.csv");
    table.write(&manifest, &csv_path)?;

    let plot: Vec<Series> = cfg
        .solvers
        .iter()
        .map(|&solver| Series {
            label: solver.label().into(),
            x: rows
                .iter()
                .filter(|r| r.solver == solver)
                .map(|r| r.trial as f64)
                .collect(),
            y: rows
                .iter()
                .filter(|r| r.solver == solver)
                .map(|r| r.wall_clock_ns as f64 * 1e-9)
                .collect(),
        })
        .collect();
    let svg = line_plot(&plot, "wall clock per trial", "trial", "seconds", YScale::Log)?;
    let svg_path = out_dir.join("bench_trials.svg");
    write_svg(&svg, &svg_path)?;
    Ok(TrialsReport {
        csv_path,
        svg_path,
        summaries,
    })
}

#[derive(Debug)]
pub struct SizeSweepReport {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    pub points: Vec<(usize, usize, usize, Vec<SolverTiming>)>,
}

/// Wall clock versus problem size, sparsity scaled proportionally.
pub fn run_size_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SizeSweepReport> {
    if cfg.nm_sweep.is_empty() {
        return Err(CappaError::InvalidConfig("nm_sweep must be nonempty".into()));
    }
    let mut points = Vec::new();
    let mut all_seeds = Vec::new();
    for &(n, m) in &cfg.nm_sweep {
        let s = ((cfg.instance.s as f64) * (n as f64) / (cfg.instance.n as f64)).round() as usize;
        let s = s.max(1);
        let (rows, seeds) = run_trials_on(cfg, n, m, s, cfg.trials)?;
        all_seeds.extend(seeds);
        points.push((n, m, s, summarize(cfg, &rows)));
    }

    let mut table = CsvTable::new(&[
        "solver",
        "n",
        "m",
        "s",
        "trials",
        "converged",
        "min_wall_clock_ns",
        "mean_wall_clock_ns",
        "max_wall_clock_ns",
    ]);
    table.note("experiment", "size_sweep");
    for (n, m, s, summaries) in &points {
        for t in summaries {
            table.push(vec![
                t.solver.label().into(),
                (*n).into(),
                (*m).into(),
                (*s).into(),
                t.total.into(),
                t.converged.into(),
                t.min_ns.into(),
                t.mean_ns.into(),
                t.max_ns.into(),
            ]);
        }
    }
    let manifest = RunManifest::new(cfg.to_toml(), all_seeds);
    let csv_path = out_dir.join("bench_size.csv");
    table.write(&manifest, &csv_path)?;

    let plot: Vec<Series> = cfg
        .solvers
        .iter()
        .map(|&solver| Series {
            label: solver.label().into(),
            x: points.iter().map(|(n, ..)| *n as f64).collect(),
            y: points
                .iter()
                .map(|(.., summaries)| {
                    summaries
                        .iter()
                        .find(|t| t.solver == solver)
                        .map(|t| t.mean_ns * 1e-9)
                        .unwrap_or(f64::NAN)
                })
                .collect(),
        })
        .collect();
    let svg = line_plot(&plot, "mean wall clock vs size", "n", "seconds", YScale::Log)?;
    let svg_path = out_dir.join("bench_size.svg");
    write_svg(&svg, &svg_path)?;
    Ok(SizeSweepReport {
        csv_path,
        svg_path,
        points,
    })
}

#[derive(Debug)]
pub struct DtSweepReport {
    pub csv_path: PathBuf,
    pub svg_path: PathBuf,
    /// Per dt: final error to the reference and the degenerate flag
    /// (single-step run).
    pub finals: Vec<(f64, f64, bool)>,
}

/// Error decay of the headline flow across discretization steps, one shared
/// instance and initial condition.
pub fn run_dt_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<DtSweepReport> {
    if cfg.dt_sweep.is_empty() {
        return Err(CappaError::InvalidConfig("dt_sweep must be nonempty".into()));
    }
    let bundle = cfg.instance.realize(cfg.master_seed)?;
    let problem = bundle.problem.with_gram();
    let reference = fista_solve(&problem, cfg.reference.tol, cfg.reference.max_iter)?;
    let x_ref = reference.x_ref;
    let x_ref_norm = x_ref.dot(&x_ref).sqrt();
    let init = cfg.init_conditions.first().ok_or_else(|| {
        CappaError::InvalidConfig("dt sweep needs at least one init condition".into())
    })?;
    let x0 = initial_state(
        &problem,
        cfg.init_direction,
        init.direction_seed,
        init.norm_scale * x_ref_norm,
    );

    let runs: Vec<(f64, Trajectory, bool, bool)> = cfg
        .dt_sweep
        .par_iter()
        .map(|&dt| {
            let mut icfg = cfg.integrator.build();
            icfg.dt = dt;
            // keep every series around a thousand samples
            let steps = (icfg.t_max / dt).ceil().max(1.0);
            icfg.record_stride = ((steps / 1000.0).ceil() as u64).max(1);
            let degenerate = dt >= icfg.t_max;
            let flow = CappaFlow::new(&problem, cfg.cappa.params());
            let (traj, diverged) =
                integrate_captured(&flow, &x0, &icfg, Some(&x_ref), None)?;
            Ok((dt, traj, degenerate, diverged))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = CsvTable::new(&["dt", "kind", "t", "error", "residual", "degenerate", "diverged"]);
    table.note("experiment", "dt_sweep");
    table.note("x_ref_norm", format!("{x_ref_norm:.16e}"));
    let mut plot = Vec::new();
    let mut finals = Vec::new();
    for (dt, traj, degenerate, diverged) in &runs {
        let errors = traj.error_to_ref.as_ref().expect("reference supplied");
        for i in 0..traj.times.len() {
            table.push(vec![
                (*dt).into(),
                "sample".into(),
                traj.times[i].into(),
                errors[i].into(),
                traj.residuals[i].into(),
                (*degenerate).into(),
                (*diverged).into(),
            ]);
        }
        let final_error = *errors.last().expect("nonempty trajectory");
        table.push(vec![
            (*dt).into(),
            "final".into(),
            (*traj.times.last().unwrap()).into(),
            final_error.into(),
            traj.final_residual().into(),
            (*degenerate).into(),
            (*diverged).into(),
        ]);
        plot.push(Series {
            label: format!("dt={dt:.0e}"),
            x: traj.times.clone(),
            y: errors.clone(),
        });
        finals.push((*dt, final_error, *degenerate));
    }
    let manifest = RunManifest::new(cfg.to_toml(), vec![cfg.master_seed, init.direction_seed]);
    let csv_path = out_dir.join("bench_dt.csv");
    table.write(&manifest, &csv_path)?;
    let svg = line_plot(
        &plot,
        "error decay vs discretization step",
        "t",
        "||x(t) - x_ref||",
        YScale::Log,
    )?;
    let svg_path = out_dir.join("bench_dt.svg");
    write_svg(&svg, &svg_path)?;
    Ok(DtSweepReport {
        csv_path,
        svg_path,
        finals,
    })
}

/// Human-readable constants report with provenance, the exponent range check,
/// and the gain-scaling suggestion for a target settle bound.
pub fn report_constants(cfg: &ExperimentConfig) -> Result<String> {
    let bundle = cfg.instance.realize(cfg.master_seed)?;
    let outcome = compute_constants(cfg, &bundle)?;
    let mut out = String::new();
    let certified = outcome.delta_source.is_certified();
    out.push_str(&format!(
        "delta_2s = {:.16e} ({})\n",
        outcome.delta_2s,
        if certified {
            "exact brute force, certified"
        } else {
            "sampled lower bound, NOT CERTIFIED"
        }
    ));
    match &outcome.constants {
        None => {
            out.push_str(&format!(
                "derived constants unavailable: {}\n",
                outcome.failure.as_deref().unwrap_or("unknown")
            ));
        }
        Some(c) => {
            for (k, v) in constants_report(c) {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push_str(&format!(
                "admissible eta interval: (0, {:.16e}); configured eta = {:.16e}\n",
                c.eta_max, c.eta
            ));
            let lo = 1.0 - c.epsilon_c;
            let in_range = c.alpha1 > lo && c.alpha1 < 1.0;
            out.push_str(&format!(
                "alpha1 = {} {} (1 - epsilon_c, 1) = ({:.6}, 1); the settling bound {}\n",
                c.alpha1,
                if in_range { "inside" } else { "OUTSIDE" },
                lo,
                if in_range { "applies" } else { "is not guaranteed" },
            ));
            match c.settle_bound {
                Some(b) => {
                    out.push_str(&format!("settle_bound = {b:.16e}"));
                    out.push_str(if certified {
                        " (certified)\n"
                    } else {
                        " (not certified: RIP constant is a sampled lower bound)\n"
                    });
                    if let Some(budget) = cfg.constants.time_budget {
                        // the bound scales as 1/beta under kappa_i -> beta kappa_i
                        let beta = b / budget;
                        out.push_str(&format!(
                            "time budget {budget:.6e}: scale gains by beta = {beta:.16e} -> kappa1 = {:.6e}, kappa2 = {:.6e}\n",
                            beta * cfg.cappa.kappa1,
                            beta * cfg.cappa.kappa2
                        ));
                    }
                }
                None => out.push_str(
                    "settle_bound = unavailable (s1 or s2 nonpositive: alpha1 outside the valid range for this c)\n",
                ),
            }
        }
    }
    Ok(out)
}

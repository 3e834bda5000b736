//! High-precision accelerated proximal gradient (FISTA with momentum restart)
//! used as the reference oracle, plus plain ISTA for iteration-count baselines.

use ndarray::{Array1, ArrayView1};

use crate::analysis::spectral_norm;
use crate::error::{CappaError, Result};
use crate::problem::SparseProblem;
use crate::prox::{kkt_residual, soft_threshold, DEFAULT_ZERO_TOL};

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x_ref: Array1<f64>,
    pub kkt_residual: f64,
    pub iterations: u64,
    pub objective: f64,
    pub converged: bool,
}

/// `0.5 ||y - phi x||^2 + lambda ||x||_1`.
pub fn objective(problem: &SparseProblem, x: &ArrayView1<f64>) -> Result<f64> {
    if x.len() != problem.n() {
        return Err(CappaError::DimensionMismatch(format!(
            "x has length {}, expected {}",
            x.len(),
            problem.n()
        )));
    }
    let r = problem.phi().dot(x) - problem.y();
    Ok(0.5 * r.dot(&r) + problem.lambda() * x.iter().map(|v| v.abs()).sum::<f64>())
}

/// Accelerated proximal gradient with step `1 / ||phi||_2^2` and momentum
/// restart whenever the objective increases. Stops when the KKT residual
/// drops to `tol` or at `max_iter`; a non-converged run is flagged, not an error.
pub fn fista_solve(problem: &SparseProblem, tol: f64, max_iter: u64) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(CappaError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let lf = {
        let s = spectral_norm(&problem.phi().view());
        s * s
    };
    let step = 1.0 / lf;
    let tau = step * problem.lambda();
    let n = problem.n();
    let mut x = Array1::<f64>::zeros(n);
    let mut momentum = x.clone();
    let mut t = 1.0f64;
    let mut obj_prev = objective(problem, &x.view())?;
    let mut iterations = 0u64;
    let mut residual = kkt_residual(problem, &x.view(), DEFAULT_ZERO_TOL)?;
    while iterations < max_iter && residual > tol {
        let g = problem.gradient(&momentum.view())?;
        let mut x_next = soft_threshold(&(&momentum - &(g * step)).view(), tau)?;
        let mut obj = objective(problem, &x_next.view())?;
        if obj > obj_prev {
            // restart: drop momentum and take a plain proximal step from x,
            // which descends for step <= 1/L
            let gx = problem.gradient(&x.view())?;
            x_next = soft_threshold(&(&x - &(gx * step)).view(), tau)?;
            obj = objective(problem, &x_next.view())?;
            momentum = x_next.clone();
            t = 1.0;
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            momentum = &x_next + &((&x_next - &x) * ((t - 1.0) / t_next));
            t = t_next;
        }
        obj_prev = obj;
        x = x_next;
        iterations += 1;
        residual = kkt_residual(problem, &x.view(), DEFAULT_ZERO_TOL)?;
    }
    let objective = objective(problem, &x.view())?;
    Ok(ReferenceSolution {
        x_ref: x,
        kkt_residual: residual,
        iterations,
        objective,
        converged: residual <= tol,
    })
}

/// Plain proximal gradient (ISTA), same stopping rule as [`fista_solve`].
pub fn ista_solve(problem: &SparseProblem, tol: f64, max_iter: u64) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(CappaError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let lf = {
        let s = spectral_norm(&problem.phi().view());
        s * s
    };
    let step = 1.0 / lf;
    let tau = step * problem.lambda();
    let mut x = Array1::<f64>::zeros(problem.n());
    let mut iterations = 0u64;
    let mut residual = kkt_residual(problem, &x.view(), DEFAULT_ZERO_TOL)?;
    while iterations < max_iter && residual > tol {
        let g = problem.gradient(&x.view())?;
        x = soft_threshold(&(&x - &(g * step)).view(), tau)?;
        iterations += 1;
        residual = kkt_residual(problem, &x.view(), DEFAULT_ZERO_TOL)?;
    }
    let objective = objective(problem, &x.view())?;
    Ok(ReferenceSolution {
        x_ref: x,
        kkt_residual: residual,
        iterations,
        objective,
        converged: residual <= tol,
    })
}

//! The smooth-gradient operator, soft-threshold proximal map, forward-backward
//! fixed-point map, and the subgradient (KKT) optimality residual.

use ndarray::{Array1, ArrayView1};

use crate::error::{CappaError, Result};
use crate::problem::SparseProblem;

/// Default support-detection threshold for [`kkt_residual`].
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Result of one forward-backward step: the prox image and how far `x` is
/// from being a fixed point of the map.
#[derive(Debug, Clone)]
pub struct ProxEvaluation {
    pub z: Array1<f64>,
    pub fixed_point_residual: f64,
}

/// Gradient of `0.5 ||y - phi x||^2`, i.e. `phi^T (phi x - y)`.
pub fn grad_f(problem: &SparseProblem, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
    problem.gradient(x)
}

/// Elementwise `sign(v_i) * max(|v_i| - tau, 0)`, with `sign(0) = 0`.
pub fn soft_threshold(v: &ArrayView1<f64>, tau: f64) -> Result<Array1<f64>> {
    if !(tau >= 0.0) {
        return Err(CappaError::InvalidArgument(format!(
            "soft-threshold level must be nonnegative, got {tau}"
        )));
    }
    Ok(v.mapv(|vi| {
        if vi > tau {
            vi - tau
        } else if vi < -tau {
            vi + tau
        } else {
            0.0
        }
    }))
}

/// Forward-backward map `z(x) = prox_{eta g}(x - eta F(x))` together with the
/// fixed-point residual `||x - z(x)||_2`. By the equilibrium equivalence, the
/// residual vanishes exactly at minimizers.
pub fn prox_step(problem: &SparseProblem, x: &ArrayView1<f64>, eta: f64) -> Result<ProxEvaluation> {
    if !(eta > 0.0) {
        return Err(CappaError::InvalidArgument(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let g = grad_f(problem, x)?;
    let forward = x - &(g * eta);
    let z = soft_threshold(&forward.view(), eta * problem.lambda())?;
    let diff = x - &z;
    let fixed_point_residual = diff.dot(&diff).sqrt();
    Ok(ProxEvaluation {
        z,
        fixed_point_residual,
    })
}

/// Max-norm violation of the l1 subgradient optimality condition:
/// `|g_i + lambda sign(x_i)|` on coordinates with `|x_i| > zero_tol`, and
/// `max(|g_i| - lambda, 0)` elsewhere. Zero exactly at minimizers.
pub fn kkt_residual(problem: &SparseProblem, x: &ArrayView1<f64>, zero_tol: f64) -> Result<f64> {
    if !(zero_tol > 0.0) {
        return Err(CappaError::InvalidArgument(format!(
            "zero_tol must be positive, got {zero_tol}"
        )));
    }
    let g = grad_f(problem, x)?;
    let lambda = problem.lambda();
    let mut worst = 0.0f64;
    for (xi, gi) in x.iter().zip(g.iter()) {
        let v = if xi.abs() > zero_tol {
            (gi + lambda * xi.signum()).abs()
        } else {
            (gi.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::generate_gaussian_instance;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn identity_problem(n_obs: usize, pad: usize, y: Array1<f64>, lambda: f64) -> SparseProblem {
        // Identity on the first n_obs coordinates, padded with extra tiny
        // columns so the m < n invariant holds; tests only exercise the
        // identity block.
        let n = n_obs + pad;
        let mut phi = Array2::zeros((n_obs, n));
        for i in 0..n_obs {
            phi[[i, i]] = 1.0;
        }
        for j in 0..pad {
            phi[[j % n_obs, n_obs + j]] = 1e-6;
        }
        SparseProblem::new(phi, y, lambda).unwrap()
    }

    /// Value of 0.5 ||y - phi x||^2 for the finite-difference oracle.
    fn smooth_objective(p: &SparseProblem, x: &Array1<f64>) -> f64 {
        let r = p.phi().dot(x) - p.y();
        0.5 * r.dot(&r)
    }

    #[test]
    fn grad_on_identity_block_is_x() {
        let p = identity_problem(3, 1, arr1(&[0.0, 0.0, 0.0]), 1.0);
        let x = arr1(&[1.0, -2.0, 3.0, 0.0]);
        let g = grad_f(&p, &x.view()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(g[i], x[i], epsilon = 1e-5);
        }
    }

    #[test]
    fn grad_vanishes_at_noiseless_truth() {
        let b = generate_gaussian_instance(10, 6, 2, 0.0, 0.1, 3).unwrap();
        let t = b.truth.unwrap();
        let g = grad_f(&b.problem, &t.x_true.view()).unwrap();
        let norm = g.dot(&g).sqrt();
        assert!(norm <= 1e-12, "grad norm at truth: {norm}");
    }

    #[test]
    fn grad_matches_central_finite_differences() {
        // independent oracle: (f(x+he_i) - f(x-he_i)) / 2h per coordinate
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let b = generate_gaussian_instance(5, 3, 2, 0.01, 0.1, 23).unwrap();
        let h = 1e-5;
        let x = Array1::from_iter((0..5).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let g = grad_f(&b.problem, &x.view()).unwrap();
        for i in 0..5 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (smooth_objective(&b.problem, &xp) - smooth_objective(&b.problem, &xm))
                / (2.0 * h);
            let denom = g[i].abs().max(1.0);
            assert!(
                (g[i] - fd).abs() / denom <= 1e-6,
                "coordinate {i}: analytic {} vs fd {}",
                g[i],
                fd
            );
        }
    }

    #[test]
    fn soft_threshold_examples() {
        let v = arr1(&[2.0, -0.5, 0.03]);
        let out = soft_threshold(&v.view(), 0.02).unwrap();
        assert_abs_diff_eq!(out[0], 1.98, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], -0.48, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], 0.01, epsilon = 1e-15);

        let zero = arr1(&[0.0, 0.0]);
        assert_eq!(soft_threshold(&zero.view(), 3.0).unwrap(), zero);

        let out = soft_threshold(&v.view(), 0.0).unwrap();
        assert_eq!(out, v);

        assert!(soft_threshold(&v.view(), -1.0).is_err());
    }

    #[test]
    fn prox_step_hand_example() {
        // identity block, y = 0, lambda = 1, eta = 0.5: x=[2,0] maps to [0.5,0]
        let p = identity_problem(2, 1, arr1(&[0.0, 0.0]), 1.0);
        let x = arr1(&[2.0, 0.0, 0.0]);
        let ev = prox_step(&p, &x.view(), 0.5).unwrap();
        assert_abs_diff_eq!(ev.z[0], 0.5, epsilon = 1e-5);
        assert_abs_diff_eq!(ev.z[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev.fixed_point_residual, 1.5, epsilon = 1e-5);
    }

    /// Scalar oracle: minimize 0.5 (u - v)^2 + w |u| by grid scan plus local
    /// refinement, independent of the closed-form soft threshold.
    fn scalar_prox_oracle(v: f64, w: f64) -> f64 {
        let obj = |u: f64| 0.5 * (u - v) * (u - v) + w * u.abs();
        let span = v.abs() + w + 1.0;
        let mut best = (obj(0.0), 0.0);
        let coarse = 4000;
        for k in 0..=coarse {
            let u = -span + 2.0 * span * (k as f64) / (coarse as f64);
            let f = obj(u);
            if f < best.0 {
                best = (f, u);
            }
        }
        // golden-section refinement around the coarse winner
        let (mut lo, mut hi) = (best.1 - 2.0 * span / coarse as f64, best.1 + 2.0 * span / coarse as f64);
        let phi = 0.618_033_988_749_894_8;
        for _ in 0..200 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if obj(a) < obj(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn prox_step_matches_scalar_minimization_oracle() {
        let b = generate_gaussian_instance(8, 5, 2, 0.01, 0.3, 41).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array1::from_iter((0..8).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let eta = 0.2;
        let ev = prox_step(&b.problem, &x.view(), eta).unwrap();
        let g = grad_f(&b.problem, &x.view()).unwrap();
        let forward = &x - &(g * eta);
        for i in 0..8 {
            let expected = scalar_prox_oracle(forward[i], eta * b.problem.lambda());
            assert!(
                (ev.z[i] - expected).abs() <= 1e-8,
                "coordinate {i}: {} vs oracle {}",
                ev.z[i],
                expected
            );
        }
    }

    #[test]
    fn kkt_residual_closed_form_orthonormal_case() {
        // identity block: solution is soft_threshold(y, lambda)
        let y = arr1(&[1.3, -0.2, 0.7]);
        let lambda = 0.4;
        let p = identity_problem(3, 1, y.clone(), lambda);
        let xs = soft_threshold(&y.view(), lambda).unwrap();
        let mut x = Array1::zeros(4);
        for i in 0..3 {
            x[i] = xs[i];
        }
        let r = kkt_residual(&p, &x.view(), DEFAULT_ZERO_TOL).unwrap();
        assert!(r <= 1e-5, "kkt residual {r}");
    }

    #[test]
    fn zero_is_optimal_when_lambda_dominates_correlations() {
        let b = generate_gaussian_instance(10, 6, 2, 0.0, 0.1, 3).unwrap();
        let corr = b.problem.phi().t().dot(b.problem.y());
        let linf = corr.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let p = SparseProblem::new(
            b.problem.phi().clone(),
            b.problem.y().clone(),
            linf * 1.001,
        )
        .unwrap();
        let x = Array1::zeros(10);
        let r = kkt_residual(&p, &x.view(), DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(r, 0.0);
    }
}

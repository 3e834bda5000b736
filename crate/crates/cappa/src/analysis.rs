//! Theory constants: RIP constants (exact brute force at desk scale, sampled
//! lower bounds otherwise), Lipschitz and strong-monotonicity moduli, the
//! admissible step interval, contraction constants, and the settling-time
//! bound of the two-power Lyapunov inequality.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CappaError, Result};
use crate::problem::SparseProblem;
use crate::prox::prox_step;

/// How the order-2s RIP constant behind a [`TheoryConstants`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaSource {
    /// Exhaustive enumeration of all supports; the constant is exact.
    ExactBruteforce,
    /// Max over sampled supports; a lower bound, so derived guarantees are
    /// not certified.
    SurrogateBound,
}

impl DeltaSource {
    pub fn is_certified(self) -> bool {
        matches!(self, DeltaSource::ExactBruteforce)
    }
}

/// Every constant in the convergence analysis, derived from one instance and
/// one parameter set.
#[derive(Debug, Clone)]
pub struct TheoryConstants {
    pub delta_2s: f64,
    /// Strong-monotonicity modulus, `1 - delta_2s`.
    pub mu: f64,
    /// Lipschitz modulus of the gradient on sparse pairs, `||phi||_2 sqrt(1 + delta_2s)`.
    pub lipschitz: f64,
    pub spectral_norm: f64,
    /// Supremum of the admissible step interval, `2 mu / L^2`.
    pub eta_max: f64,
    pub eta: f64,
    /// Squared contraction factor, `1 / (1 + 2 eta mu - eta^2 L^2)`.
    pub c_bar: f64,
    pub c: f64,
    /// `log(c) / log((1-c)/(1+c))`; the first exponent must lie in
    /// `(1 - epsilon_c, 1)` for the settling bound to hold.
    pub epsilon_c: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub s1: f64,
    pub s2: f64,
    pub a1: f64,
    pub a2: f64,
    /// Uniform settling-time bound `1/(a1 (1-gamma1)) + 1/(a2 (gamma2-1))`;
    /// `None` when `s1 <= 0` or `s2 <= 0` (alpha1 outside the valid range) —
    /// the flow still runs, but no bound is claimed.
    pub settle_bound: Option<f64>,
    pub delta_source: DeltaSource,
}

/// Spectral norm `||a||_2` by power iteration on `a^T a`, relative tolerance
/// 1e-10, at most 10^4 iterations. Deterministic start vector.
pub fn spectral_norm(a: &ArrayView2<f64>) -> f64 {
    let gram = a.t().dot(a);
    let n = gram.nrows();
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    // break symmetry in case the all-ones vector is orthogonal to the top eigenvector
    for (i, vi) in v.iter_mut().enumerate() {
        *vi += 1e-3 * ((i as f64) + 1.0).sin();
    }
    let norm = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / norm);
    let mut prev = 0.0f64;
    for _ in 0..10_000 {
        let w = gram.dot(&v);
        let lam = v.dot(&w);
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        if (lam - prev).abs() <= 1e-10 * lam.abs().max(1.0) {
            return lam.max(0.0).sqrt();
        }
        prev = lam;
    }
    prev.max(0.0).sqrt()
}

/// Extreme eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
fn symmetric_eig_extremes(a: &Array2<f64>) -> (f64, f64) {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off <= 1e-28 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(m[[i, i]]);
        hi = hi.max(m[[i, i]]);
    }
    (lo, hi)
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i + 1) as u128,
            // far beyond any enumeration guard
            None => return u128::MAX,
        }
    }
    acc
}

const ENUMERATION_GUARD: u128 = 2_000_000;

fn support_deviation(phi: &ArrayView2<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    let mut gram = Array2::zeros((k, k));
    for (a, &ja) in support.iter().enumerate() {
        for (b, &jb) in support.iter().enumerate() {
            gram[[a, b]] = phi.column(ja).dot(&phi.column(jb));
        }
    }
    let (lo, hi) = symmetric_eig_extremes(&gram);
    (1.0 - lo).max(hi - 1.0)
}

/// Exact order-k RIP constant by enumerating every size-k support:
/// `max_S max(1 - sigma_min^2(phi_S), sigma_max^2(phi_S) - 1)`.
/// Refuses when the support count exceeds 2e6.
pub fn rip_constant_bruteforce(phi: &ArrayView2<f64>, order: usize) -> Result<f64> {
    let (m, n) = phi.dim();
    if order == 0 || order > m {
        return Err(CappaError::InvalidArgument(format!(
            "RIP order must lie in 1..={m}, got {order}"
        )));
    }
    let count = binomial(n, order);
    if count > ENUMERATION_GUARD {
        return Err(CappaError::Capacity {
            supports: count,
            order,
            limit: ENUMERATION_GUARD,
        });
    }
    // partition the support space by first index; reduce by max
    let delta = (0..=(n - order))
        .into_par_iter()
        .map(|first| {
            let mut support: Vec<usize> = (first..first + order).collect();
            // enumerate all supports starting at `first` in lexicographic order
            let mut local = 0.0f64;
            loop {
                local = local.max(support_deviation(phi, &support));
                // advance positions 1.. (position 0 fixed at `first`)
                let mut i = order;
                loop {
                    if i == 1 {
                        return local;
                    }
                    i -= 1;
                    if support[i] < n - (order - i) {
                        support[i] += 1;
                        for j in (i + 1)..order {
                            support[j] = support[j - 1] + 1;
                        }
                        break;
                    }
                }
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(delta)
}

/// Sampled lower bound on the order-k RIP constant: max deviation over
/// `samples` uniformly drawn supports. Always a lower bound on the exact
/// constant; everything derived from it is non-certified.
pub fn rip_constant_surrogate(
    phi: &ArrayView2<f64>,
    order: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let (m, n) = phi.dim();
    if order == 0 || order > m {
        return Err(CappaError::InvalidArgument(format!(
            "RIP order must lie in 1..={m}, got {order}"
        )));
    }
    if samples == 0 {
        return Err(CappaError::InvalidArgument(
            "sample count must be positive".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = 0.0f64;
    for _ in 0..samples {
        for i in 0..order {
            let j = rng.gen_range(i..n);
            idx.swap(i, j);
        }
        best = best.max(support_deviation(phi, &idx[..order]));
    }
    Ok(best)
}

/// `log(c) / log((1-c)/(1+c))` for `c` in (0,1).
pub fn epsilon_of_c(c: f64) -> f64 {
    c.ln() / ((1.0 - c) / (1.0 + c)).ln()
}

/// True iff `((1-c)/(1+c))^(1-alpha) > c`. Holds for every
/// `alpha` in `(1 - epsilon(c), 1) U (1, inf)`.
pub fn check_lemma_inequality(c: f64, alpha: f64) -> bool {
    ((1.0 - c) / (1.0 + c)).powf(1.0 - alpha) > c
}

/// Which RIP estimate to use when deriving constants.
#[derive(Debug, Clone, Copy)]
pub enum DeltaMode {
    ExactBruteforce,
    Surrogate { samples: usize, seed: u64 },
}

#[allow(clippy::too_many_arguments)]
pub fn derive_constants(
    phi: &ArrayView2<f64>,
    s: usize,
    eta: f64,
    kappa1: f64,
    kappa2: f64,
    alpha1: f64,
    alpha2: f64,
    delta_mode: DeltaMode,
) -> Result<TheoryConstants> {
    let (delta_2s, delta_source) = match delta_mode {
        DeltaMode::ExactBruteforce => (
            rip_constant_bruteforce(phi, 2 * s)?,
            DeltaSource::ExactBruteforce,
        ),
        DeltaMode::Surrogate { samples, seed } => (
            rip_constant_surrogate(phi, 2 * s, samples, seed)?,
            DeltaSource::SurrogateBound,
        ),
    };
    derive_constants_from_delta(
        delta_2s,
        spectral_norm(phi),
        eta,
        kappa1,
        kappa2,
        alpha1,
        alpha2,
        delta_source,
    )
}

/// Core arithmetic, split out so the worked scalar cases are testable without
/// a matrix.
#[allow(clippy::too_many_arguments)]
pub fn derive_constants_from_delta(
    delta_2s: f64,
    spectral: f64,
    eta: f64,
    kappa1: f64,
    kappa2: f64,
    alpha1: f64,
    alpha2: f64,
    delta_source: DeltaSource,
) -> Result<TheoryConstants> {
    if !(0.0 < alpha1 && alpha1 < 1.0) || !(alpha2 > 1.0) || !(kappa1 > 0.0) || !(kappa2 > 0.0) {
        return Err(CappaError::InvalidConfig(format!(
            "require 0 < alpha1 < 1 < alpha2 and positive gains, got alpha1={alpha1}, alpha2={alpha2}, kappa1={kappa1}, kappa2={kappa2}"
        )));
    }
    if delta_2s >= 1.0 {
        return Err(CappaError::InvalidConfig(format!(
            "delta_2s = {delta_2s} >= 1: the strong-monotonicity modulus is nonpositive and no constants can be derived"
        )));
    }
    let mu = 1.0 - delta_2s;
    let lipschitz = spectral * (1.0 + delta_2s).sqrt();
    let eta_max = 2.0 * mu / (lipschitz * lipschitz);
    if !(eta > 0.0 && eta < eta_max) {
        return Err(CappaError::InvalidConfig(format!(
            "eta = {eta} outside the admissible interval (0, {eta_max})"
        )));
    }
    let c_bar = 1.0 / (1.0 + 2.0 * eta * mu - eta * eta * lipschitz * lipschitz);
    let c = c_bar.sqrt();
    let epsilon_c = epsilon_of_c(c);
    let gamma1 = (1.0 + alpha1) / 2.0;
    let gamma2 = (1.0 + alpha2) / 2.0;
    let ratio = (1.0 - c) / (1.0 + c);
    let s1 = kappa1 / (1.0 - c).powf(1.0 - alpha1) * (ratio.powf(1.0 - alpha1) - c);
    let s2 = kappa2 / (1.0 - c).powf(1.0 - alpha2) * (ratio.powf(1.0 - alpha2) - c);
    let a1 = 2.0f64.powf(gamma1) * s1;
    let a2 = 2.0f64.powf(gamma2) * s2;
    let settle_bound = if s1 > 0.0 && s2 > 0.0 {
        Some(1.0 / (a1 * (1.0 - gamma1)) + 1.0 / (a2 * (gamma2 - 1.0)))
    } else {
        None
    };
    Ok(TheoryConstants {
        delta_2s,
        mu,
        lipschitz,
        spectral_norm: spectral,
        eta_max,
        eta,
        c_bar,
        c,
        epsilon_c,
        alpha1,
        alpha2,
        gamma1,
        gamma2,
        s1,
        s2,
        a1,
        a2,
        settle_bound,
        delta_source,
    })
}

/// Max over samples of `||z(x) - x_ref|| / ||x - x_ref||`, skipping samples at
/// the reference itself. Callers assert the result against the contraction
/// constant `c`.
pub fn check_contraction(
    problem: &SparseProblem,
    eta: f64,
    x_ref: &ArrayView1<f64>,
    samples: &[Array1<f64>],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in samples {
        let diff = x - x_ref;
        let dist = diff.dot(&diff).sqrt();
        if dist < 1e-12 {
            continue;
        }
        let ev = prox_step(problem, &x.view(), eta)?;
        let zdiff = &ev.z - x_ref;
        worst = worst.max(zdiff.dot(&zdiff).sqrt() / dist);
    }
    Ok(worst)
}

//! Sparse recovery via continuous-time proximal flows.
//!
//! The crate solves l1-regularized least squares
//! `min_x 0.5 ||y - phi x||^2 + lambda ||x||_1` by integrating proximal
//! dynamical systems, with a fixed-time accelerated flow as the headline
//! method, nominal and LCA baselines, convergence-certificate constants,
//! a high-precision reference solver, and a benchmark harness.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod problem;
pub mod prox;
pub mod solver;

pub use analysis::{derive_constants, DeltaMode, DeltaSource, TheoryConstants};
pub use dynamics::{CappaFlow, CappaParams, Dynamics, LcaFlow, LcaParams, NominalPds};
pub use error::{CappaError, Result};
pub use integrator::{integrate, IntegratorConfig, Scheme, Trajectory};
pub use problem::{
    generate_gaussian_instance, generate_partial_orthogonal_instance, load_bundle, save_bundle,
    GroundTruth, ProblemBundle, SparseProblem,
};
pub use prox::{kkt_residual, prox_step, soft_threshold};
pub use solver::{fista_solve, ista_solve, objective, ReferenceSolution};

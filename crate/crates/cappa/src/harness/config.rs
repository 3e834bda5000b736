//! TOML experiment configuration. Unknown keys are rejected so a typo cannot
//! silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{CappaParams, LcaParams};
use crate::error::{CappaError, Result};
use crate::integrator::{IntegratorConfig, Scheme};
use crate::problem::{
    generate_gaussian_instance, generate_partial_orthogonal_instance, load_bundle, ProblemBundle,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Cappa,
    Pds,
    Lca,
    FtLca,
    Fista,
}

impl SolverKind {
    pub fn label(self) -> &'static str {
        match self {
            SolverKind::Cappa => "cappa",
            SolverKind::Pds => "pds",
            SolverKind::Lca => "lca",
            SolverKind::FtLca => "ft_lca",
            SolverKind::Fista => "fista",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Gaussian,
    /// Rows of a random orthogonal matrix, rescaled to unit columns. Gives
    /// much smaller RIP constants than Gaussian at desk scale.
    PartialOrthogonal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    /// Path to a saved bundle; when set, the generation fields are ignored.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_matrix")]
    pub matrix: MatrixKind,
}

fn default_n() -> usize {
    400
}
fn default_m() -> usize {
    200
}
fn default_s() -> usize {
    20
}
fn default_sigma() -> f64 {
    0.016
}
fn default_lambda() -> f64 {
    0.05
}
fn default_matrix() -> MatrixKind {
    MatrixKind::Gaussian
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            path: None,
            n: default_n(),
            m: default_m(),
            s: default_s(),
            sigma: default_sigma(),
            lambda: default_lambda(),
            matrix: default_matrix(),
        }
    }
}

impl InstanceConfig {
    /// Load from `path` when set, otherwise generate with the given seed.
    pub fn realize(&self, seed: u64) -> Result<ProblemBundle> {
        match &self.path {
            Some(p) => load_bundle(p),
            None => match self.matrix {
                MatrixKind::Gaussian => generate_gaussian_instance(
                    self.n,
                    self.m,
                    self.s,
                    self.sigma,
                    self.lambda,
                    seed,
                ),
                MatrixKind::PartialOrthogonal => generate_partial_orthogonal_instance(
                    self.n,
                    self.m,
                    self.s,
                    self.sigma,
                    self.lambda,
                    seed,
                ),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CappaConfig {
    #[serde(default = "default_kappa")]
    pub kappa1: f64,
    #[serde(default = "default_kappa")]
    pub kappa2: f64,
    #[serde(default = "default_alpha1")]
    pub alpha1: f64,
    #[serde(default = "default_alpha2")]
    pub alpha2: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_kappa() -> f64 {
    50.0
}
fn default_alpha1() -> f64 {
    0.1
}
fn default_alpha2() -> f64 {
    1.1
}
fn default_eta() -> f64 {
    0.4
}

impl Default for CappaConfig {
    fn default() -> Self {
        Self {
            kappa1: default_kappa(),
            kappa2: default_kappa(),
            alpha1: default_alpha1(),
            alpha2: default_alpha2(),
            eta: default_eta(),
        }
    }
}

impl CappaConfig {
    pub fn params(&self) -> CappaParams {
        CappaParams {
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            eta: self.eta,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LcaConfig {
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Defaults to the instance's lambda when absent.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_ft_exponent")]
    pub ft_exponent: f64,
}

fn default_tau() -> f64 {
    1.0
}
fn default_ft_exponent() -> f64 {
    0.5
}

impl Default for LcaConfig {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            threshold: None,
            ft_exponent: default_ft_exponent(),
        }
    }
}

impl LcaConfig {
    pub fn params(&self, lambda: f64) -> LcaParams {
        LcaParams {
            tau: self.tau,
            threshold: self.threshold.unwrap_or(lambda),
            ft_exponent: self.ft_exponent,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default)]
    pub stop_residual: f64,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Euler,
    Rk4,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_max() -> f64 {
    1.0
}
fn default_stride() -> u64 {
    10
}
fn default_scheme() -> SchemeName {
    SchemeName::Euler
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_max: default_t_max(),
            stop_residual: 0.0,
            record_stride: default_stride(),
            scheme: default_scheme(),
        }
    }
}

impl IntegratorSection {
    pub fn build(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_max: self.t_max,
            stop_residual: self.stop_residual,
            stop_on_settle: false,
            record_stride: self.record_stride,
            scheme: match self.scheme {
                SchemeName::Euler => Scheme::Euler,
                SchemeName::Rk4 => Scheme::Rk4,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default = "default_ref_tol")]
    pub tol: f64,
    #[serde(default = "default_ref_iters")]
    pub max_iter: u64,
}

fn default_ref_tol() -> f64 {
    1e-10
}
fn default_ref_iters() -> u64 {
    2_000_000
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            tol: default_ref_tol(),
            max_iter: default_ref_iters(),
        }
    }
}

/// How initial-condition directions are drawn before scaling to the target norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitDirection {
    /// Dense standard normal direction.
    Gaussian,
    /// Direction inside the row space of phi, `phi^T g` for Gaussian `g`.
    /// Keeps the whole sweep inside the subspace the flow can traverse fast.
    Rowspace,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitCondition {
    pub direction_seed: u64,
    /// Initial norm as a multiple of the reference norm.
    pub norm_scale: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaModeName {
    /// Brute force when the support count fits the guard, surrogate otherwise.
    Auto,
    Exact,
    Surrogate,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default = "default_delta_mode")]
    pub delta_mode: DeltaModeName,
    #[serde(default = "default_surrogate_samples")]
    pub surrogate_samples: usize,
    /// Time budget for the gain-scaling suggestion; omitted disables it.
    #[serde(default)]
    pub time_budget: Option<f64>,
}

fn default_delta_mode() -> DeltaModeName {
    DeltaModeName::Auto
}
fn default_surrogate_samples() -> usize {
    2_000
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            delta_mode: default_delta_mode(),
            surrogate_samples: default_surrogate_samples(),
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default = "default_init_conditions")]
    pub init_conditions: Vec<InitCondition>,
    #[serde(default = "default_init_direction")]
    pub init_direction: InitDirection,
    /// Settle tolerance as a fraction of the reference norm.
    #[serde(default = "default_settle_tol_rel")]
    pub settle_tol_rel: f64,
    #[serde(default = "default_dt_sweep")]
    pub dt_sweep: Vec<f64>,
    #[serde(default = "default_nm_sweep")]
    pub nm_sweep: Vec<(usize, usize)>,
    /// Require the swept (n, m) pairs to share the ratio of the first pair.
    #[serde(default)]
    pub enforce_nm_ratio: bool,
    #[serde(default)]
    pub instance: InstanceConfig,
    #[serde(default)]
    pub cappa: CappaConfig,
    #[serde(default)]
    pub lca: LcaConfig,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub constants: ConstantsConfig,
}

fn default_master_seed() -> u64 {
    1
}
fn default_trials() -> usize {
    100
}
fn default_solvers() -> Vec<SolverKind> {
    vec![
        SolverKind::Cappa,
        SolverKind::Pds,
        SolverKind::Lca,
        SolverKind::FtLca,
    ]
}
fn default_init_conditions() -> Vec<InitCondition> {
    vec![
        InitCondition {
            direction_seed: 101,
            norm_scale: 1.0,
        },
        InitCondition {
            direction_seed: 102,
            norm_scale: 10.0,
        },
        InitCondition {
            direction_seed: 103,
            norm_scale: 100.0,
        },
        InitCondition {
            direction_seed: 104,
            norm_scale: 1000.0,
        },
    ]
}
fn default_init_direction() -> InitDirection {
    InitDirection::Gaussian
}
fn default_settle_tol_rel() -> f64 {
    1e-3
}
fn default_dt_sweep() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5]
}
fn default_nm_sweep() -> Vec<(usize, usize)> {
    vec![(400, 200), (500, 250), (600, 300)]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config populates all defaults")
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            CappaError::InvalidConfig(format!("config parse failed: {e}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CappaError::InvalidConfig("trials must be >= 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(CappaError::InvalidConfig(
                "at least one solver must be listed".into(),
            ));
        }
        if !(self.settle_tol_rel > 0.0) {
            return Err(CappaError::InvalidConfig(format!(
                "settle_tol_rel must be positive, got {}",
                self.settle_tol_rel
            )));
        }
        if self.dt_sweep.iter().any(|&dt| !(dt > 0.0)) {
            return Err(CappaError::InvalidConfig(
                "dt_sweep values must be positive".into(),
            ));
        }
        for &(n, m) in &self.nm_sweep {
            if m == 0 || n <= m {
                return Err(CappaError::InvalidConfig(format!(
                    "nm_sweep pair ({n}, {m}) must satisfy 0 < m < n"
                )));
            }
        }
        if self.enforce_nm_ratio {
            if let Some(&(n0, m0)) = self.nm_sweep.first() {
                for &(n, m) in &self.nm_sweep {
                    if n * m0 != n0 * m {
                        return Err(CappaError::InvalidConfig(format!(
                            "nm_sweep pair ({n}, {m}) breaks the fixed n/m ratio {n0}/{m0}"
                        )));
                    }
                }
            }
        }
        self.cappa.params().validate()?;
        self.integrator.build().validate()?;
        Ok(())
    }
}

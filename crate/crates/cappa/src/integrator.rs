//! Fixed-step time integration of the flows, with trajectory instrumentation
//! (residuals, error to a reference point, settle times, wall clock).

use std::time::Instant;

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;

use crate::dynamics::Dynamics;
use crate::error::{CappaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Early-stop threshold on the stationarity residual; 0 disables it.
    pub stop_residual: f64,
    /// Stop once the error to the reference drops below the settle tolerance.
    /// Requires both a reference point and a settle tolerance.
    pub stop_on_settle: bool,
    /// Record every `record_stride`-th step (plus the initial and final states).
    pub record_stride: u64,
    pub scheme: Scheme,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        Self {
            dt,
            t_max,
            stop_residual: 0.0,
            stop_on_settle: false,
            record_stride: 1,
            scheme: Scheme::Euler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CappaError::InvalidConfig(format!(
                "dt must be positive and finite, got {}",
                self.dt
            )));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(CappaError::InvalidConfig(format!(
                "t_max must be positive and finite, got {}",
                self.t_max
            )));
        }
        if !(self.stop_residual >= 0.0) {
            return Err(CappaError::InvalidConfig(format!(
                "stop_residual must be nonnegative, got {}",
                self.stop_residual
            )));
        }
        if self.record_stride == 0 {
            return Err(CappaError::InvalidConfig(
                "record_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Recorded trajectory. Sample vectors all share the same length; `states`
/// holds the raw integrator state, `error_to_ref` is measured on the flow
/// output (which differs from the state for internal-state flows).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Array1<f64>>,
    pub residuals: Vec<f64>,
    pub error_to_ref: Option<Vec<f64>>,
    pub steps_taken: u64,
    pub converged: bool,
    /// First time the error to the reference drops below the settle
    /// tolerance, linearly interpolated between recorded samples.
    pub settle_time: Option<f64>,
    pub wall_clock_ns: u128,
}

impl Trajectory {
    pub fn final_state(&self) -> &Array1<f64> {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("trajectory has at least one sample")
    }
}

fn check_finite(x: &Array1<f64>, step: u64, time: f64, last: &Array1<f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CappaError::Divergence {
            step,
            time,
            last_finite: last.to_vec(),
        })
    }
}

fn step_once(
    dynamics: &dyn Dynamics,
    x: &Array1<f64>,
    dt: f64,
    scheme: Scheme,
) -> Result<Array1<f64>> {
    match scheme {
        Scheme::Euler => {
            let k = dynamics.rhs(&x.view())?;
            Ok(x + &(k * dt))
        }
        Scheme::Rk4 => {
            let k1 = dynamics.rhs(&x.view())?;
            let k2 = dynamics.rhs(&(x + &(&k1 * (0.5 * dt))).view())?;
            let k3 = dynamics.rhs(&(x + &(&k2 * (0.5 * dt))).view())?;
            let k4 = dynamics.rhs(&(x + &(&k3 * dt)).view())?;
            let incr = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            Ok(x + &incr)
        }
    }
}

/// Integrate from `x0` until `t_max` or until the stationarity residual drops
/// to `stop_residual`. When `x_ref` is given, the distance of the flow output
/// to it is recorded and the settle time against `settle_tol` is extracted.
/// Non-finite states abort with a divergence error carrying the last finite
/// state and the offending step index.
pub fn integrate(
    dynamics: &dyn Dynamics,
    x0: &ArrayView1<f64>,
    config: &IntegratorConfig,
    x_ref: Option<&ArrayView1<f64>>,
    settle_tol: Option<f64>,
) -> Result<Trajectory> {
    config.validate()?;
    if x0.len() != dynamics.dim() {
        return Err(CappaError::DimensionMismatch(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            dynamics.dim()
        )));
    }
    if let Some(r) = x_ref {
        if r.len() != dynamics.dim() {
            return Err(CappaError::DimensionMismatch(format!(
                "reference has length {}, expected {}",
                r.len(),
                dynamics.dim()
            )));
        }
    }
    if let Some(tol) = settle_tol {
        if !(tol > 0.0) {
            return Err(CappaError::InvalidConfig(format!(
                "settle tolerance must be positive, got {tol}"
            )));
        }
        if x_ref.is_none() {
            return Err(CappaError::InvalidConfig(
                "settle tolerance given without a reference point".into(),
            ));
        }
    }
    if config.stop_on_settle && (x_ref.is_none() || settle_tol.is_none()) {
        return Err(CappaError::InvalidConfig(
            "stop_on_settle requires a reference point and a settle tolerance".into(),
        ));
    }

    let total_steps = (config.t_max / config.dt).ceil() as u64;
    let started = Instant::now();

    let mut x = x0.to_owned();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut residuals = Vec::new();
    let mut errors: Option<Vec<f64>> = x_ref.map(|_| Vec::new());

    let error_of = |x: &Array1<f64>| -> Result<Option<f64>> {
        match x_ref {
            Some(r) => {
                let out = dynamics.output(&x.view())?;
                let d = &out - r;
                Ok(Some(d.dot(&d).sqrt()))
            }
            None => Ok(None),
        }
    };

    let record = |t: f64,
                      x: &Array1<f64>,
                      times: &mut Vec<f64>,
                      states: &mut Vec<Array1<f64>>,
                      residuals: &mut Vec<f64>,
                      errors: &mut Option<Vec<f64>>|
     -> Result<f64> {
        let res = dynamics.residual(&x.view())?;
        times.push(t);
        states.push(x.clone());
        residuals.push(res);
        if let Some(errs) = errors {
            errs.push(error_of(x)?.expect("reference present"));
        }
        Ok(res)
    };

    let mut converged = false;
    let res0 = record(0.0, &x, &mut times, &mut states, &mut residuals, &mut errors)?;
    if config.stop_residual > 0.0 && res0 <= config.stop_residual {
        converged = true;
    }
    if config.stop_on_settle {
        let e0 = error_of(&x)?.expect("reference present");
        if e0 <= settle_tol.expect("settle tolerance present") {
            converged = true;
        }
    }

    let mut steps_taken = 0u64;
    if !converged {
        let mut last_recorded = 0u64;
        for k in 0..total_steps {
            let t_next = (k + 1) as f64 * config.dt;
            let x_next = step_once(dynamics, &x, config.dt, config.scheme)?;
            check_finite(&x_next, k + 1, t_next, &x)?;
            x = x_next;
            steps_taken = k + 1;
            let due = steps_taken % config.record_stride == 0;
            let mut res = None;
            if due {
                last_recorded = steps_taken;
                res = Some(record(
                    t_next,
                    &x,
                    &mut times,
                    &mut states,
                    &mut residuals,
                    &mut errors,
                )?);
            }
            let mut stop = false;
            if config.stop_residual > 0.0 {
                let r = match res {
                    Some(r) => r,
                    None => dynamics.residual(&x.view())?,
                };
                if r <= config.stop_residual {
                    stop = true;
                }
            }
            if !stop && config.stop_on_settle {
                let e = error_of(&x)?.expect("reference present");
                if e <= settle_tol.expect("settle tolerance present") {
                    stop = true;
                }
            }
            if stop {
                converged = true;
                if !due {
                    last_recorded = steps_taken;
                    record(
                        t_next,
                        &x,
                        &mut times,
                        &mut states,
                        &mut residuals,
                        &mut errors,
                    )?;
                }
                break;
            }
        }
        if last_recorded != steps_taken {
            record(
                steps_taken as f64 * config.dt,
                &x,
                &mut times,
                &mut states,
                &mut residuals,
                &mut errors,
            )?;
        }
    }

    let wall_clock_ns = started.elapsed().as_nanos();

    let settle_time = match (&errors, settle_tol) {
        (Some(errs), Some(tol)) => settle_crossing(&times, errs, tol),
        _ => None,
    };

    Ok(Trajectory {
        times,
        states,
        residuals,
        error_to_ref: errors,
        steps_taken,
        converged,
        settle_time,
        wall_clock_ns,
    })
}

/// First crossing of `tol` by the sampled error curve, linearly interpolated
/// between the bracketing samples. `None` if the curve never reaches `tol`.
pub fn settle_crossing(times: &[f64], errors: &[f64], tol: f64) -> Option<f64> {
    debug_assert_eq!(times.len(), errors.len());
    if errors.is_empty() {
        return None;
    }
    if errors[0] <= tol {
        return Some(times[0]);
    }
    for i in 1..errors.len() {
        if errors[i] <= tol {
            let (t0, t1) = (times[i - 1], times[i]);
            let (e0, e1) = (errors[i - 1], errors[i]);
            if e0 == e1 {
                return Some(t1);
            }
            let frac = (e0 - tol) / (e0 - e1);
            return Some(t0 + frac * (t1 - t0));
        }
    }
    None
}

/// One entry of a settle-time sweep over initial conditions.
#[derive(Debug, Clone)]
pub struct SettleSample {
    pub initial_norm: f64,
    pub settle_time: Option<f64>,
    pub steps_taken: u64,
    pub final_error: f64,
}

/// Integrate the same flow from each initial condition in parallel and report
/// the settle time of each run against `settle_tol`.
pub fn settle_time_sweep<D: Dynamics>(
    dynamics: &D,
    initials: &[Array1<f64>],
    config: &IntegratorConfig,
    x_ref: &ArrayView1<f64>,
    settle_tol: f64,
) -> Result<Vec<SettleSample>> {
    initials
        .par_iter()
        .map(|x0| {
            let traj = integrate(dynamics, &x0.view(), config, Some(x_ref), Some(settle_tol))?;
            let final_error = traj
                .error_to_ref
                .as_ref()
                .and_then(|e| e.last().copied())
                .unwrap_or(f64::NAN);
            Ok(SettleSample {
                initial_norm: x0.dot(x0).sqrt(),
                settle_time: traj.settle_time,
                steps_taken: traj.steps_taken,
                final_error,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr1;

    struct LinearDecay {
        rate: f64,
        dim: usize,
    }

    impl Dynamics for LinearDecay {
        fn rhs(&self, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
            Ok(x.mapv(|v| -self.rate * v))
        }
        fn residual(&self, x: &ArrayView1<f64>) -> Result<f64> {
            Ok(x.dot(x).sqrt())
        }
        fn dim(&self) -> usize {
            self.dim
        }
    }

    struct Blowup;

    impl Dynamics for Blowup {
        fn rhs(&self, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
            Ok(x.mapv(|v| v * v * v))
        }
        fn residual(&self, x: &ArrayView1<f64>) -> Result<f64> {
            Ok(x.dot(x).sqrt())
        }
        fn dim(&self) -> usize {
            1
        }
    }

    struct Still {
        dim: usize,
    }

    impl Dynamics for Still {
        fn rhs(&self, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
            Ok(Array1::zeros(x.len()))
        }
        fn residual(&self, _x: &ArrayView1<f64>) -> Result<f64> {
            Ok(0.0)
        }
        fn dim(&self) -> usize {
            self.dim
        }
    }

    #[test]
    fn zero_field_stays_put() {
        let d = Still { dim: 3 };
        let x0 = arr1(&[1.0, -2.0, 0.5]);
        let cfg = IntegratorConfig::new(0.1, 1.0);
        let traj = integrate(&d, &x0.view(), &cfg, None, None).unwrap();
        assert_eq!(traj.final_state(), &x0);
        assert_eq!(traj.steps_taken, 10);
        assert_eq!(traj.times.len(), 11);
    }

    #[test]
    fn euler_on_linear_decay_is_geometric() {
        // x' = -x with dt = 0.1 gives x_k = 0.9^k exactly under Euler
        let d = LinearDecay { rate: 1.0, dim: 1 };
        let x0 = arr1(&[1.0]);
        let cfg = IntegratorConfig::new(0.1, 1.0);
        let traj = integrate(&d, &x0.view(), &cfg, None, None).unwrap();
        assert_abs_diff_eq!(traj.final_state()[0], 0.9f64.powi(10), epsilon = 1e-15);
        assert_abs_diff_eq!(traj.final_state()[0], 0.34867844010000015, epsilon = 1e-15);
    }

    #[test]
    fn rk4_on_linear_decay_is_near_exact() {
        let d = LinearDecay { rate: 1.0, dim: 1 };
        let x0 = arr1(&[1.0]);
        let mut cfg = IntegratorConfig::new(0.1, 1.0);
        cfg.scheme = Scheme::Rk4;
        let traj = integrate(&d, &x0.view(), &cfg, None, None).unwrap();
        // per-step factor error ~ dt^5/120, accumulated over 10 steps
        assert!((traj.final_state()[0] - (-1.0f64).exp()).abs() <= 1e-5);
        assert!((traj.final_state()[0] - (-1.0f64).exp()).abs() > 1e-8);
    }

    #[test]
    fn euler_error_halves_with_the_step() {
        // first-order convergence on the smooth linear flow
        let d = LinearDecay { rate: 1.0, dim: 1 };
        let x0 = arr1(&[1.0]);
        let exact = (-1.0f64).exp();
        let run = |dt: f64| {
            let cfg = IntegratorConfig::new(dt, 1.0);
            integrate(&d, &x0.view(), &cfg, None, None).unwrap().final_state()[0]
        };
        let e1 = (run(1e-3) - exact).abs();
        let e2 = (run(5e-4) - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 2.0).abs() < 0.05, "order ratio {ratio}");
    }

    #[test]
    fn divergence_reports_step_and_last_finite_state() {
        let x0 = arr1(&[10.0]);
        let cfg = IntegratorConfig::new(0.5, 100.0);
        let err = integrate(&Blowup, &x0.view(), &cfg, None, None).unwrap_err();
        match err {
            CappaError::Divergence {
                step, last_finite, ..
            } => {
                assert!(step >= 1);
                assert!(last_finite.iter().all(|v| v.is_finite()));
            }
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn early_stop_on_residual_marks_convergence() {
        let d = LinearDecay { rate: 1.0, dim: 2 };
        let x0 = arr1(&[3.0, 4.0]);
        let mut cfg = IntegratorConfig::new(0.01, 100.0);
        cfg.stop_residual = 1e-3;
        let traj = integrate(&d, &x0.view(), &cfg, None, None).unwrap();
        assert!(traj.converged);
        assert!(traj.final_residual() <= 1e-3);
        assert!((traj.steps_taken as f64) < 100.0 / 0.01);
    }

    #[test]
    fn stop_on_settle_halts_at_the_crossing() {
        let d = LinearDecay { rate: 1.0, dim: 1 };
        let x0 = arr1(&[5.0]);
        let x_ref = arr1(&[0.0]);
        let mut cfg = IntegratorConfig::new(0.1, 100.0);
        cfg.stop_on_settle = true;
        let traj = integrate(&d, &x0.view(), &cfg, Some(&x_ref.view()), Some(0.5)).unwrap();
        assert!(traj.converged);
        // 0.9^k * 5 <= 0.5 first at k = 22
        assert_eq!(traj.steps_taken, 22);
        assert!(traj.error_to_ref.unwrap().last().unwrap() <= &0.5);
        // requires both reference and tolerance
        assert!(integrate(&d, &x0.view(), &cfg, Some(&x_ref.view()), None).is_err());
    }

    #[test]
    fn record_stride_keeps_endpoints() {
        let d = LinearDecay { rate: 1.0, dim: 1 };
        let x0 = arr1(&[1.0]);
        let mut cfg = IntegratorConfig::new(0.1, 1.05);
        cfg.record_stride = 4;
        let traj = integrate(&d, &x0.view(), &cfg, None, None).unwrap();
        // ceil(1.05/0.1) = 11 steps; recorded at 0, 4, 8, 11
        assert_eq!(traj.steps_taken, 11);
        assert_eq!(traj.times.len(), 4);
        assert_abs_diff_eq!(*traj.times.last().unwrap(), 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(traj.final_state()[0], 0.9f64.powi(11), epsilon = 1e-15);
    }

    #[test]
    fn settle_time_interpolates_linearly() {
        // error samples 2.0 at t=0, 0.5 at t=1; tol 1.0 crosses at t = 2/3
        let t = settle_crossing(&[0.0, 1.0], &[2.0, 0.5], 1.0).unwrap();
        assert_abs_diff_eq!(t, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(settle_crossing(&[0.0, 1.0], &[2.0, 1.5], 1.0), None);
        assert_eq!(settle_crossing(&[0.0, 1.0], &[0.5, 0.2], 1.0), Some(0.0));
    }

    #[test]
    fn settle_time_on_decay_matches_closed_form() {
        // Euler decay from norm 5 to tol 0.5 on a 1-d flow; the discrete
        // crossing time is log(0.1)/log(0.9) steps, interpolated
        let d = LinearDecay { rate: 1.0, dim: 1 };
        let x0 = arr1(&[5.0]);
        let x_ref = arr1(&[0.0]);
        let cfg = IntegratorConfig::new(0.1, 10.0);
        let traj = integrate(&d, &x0.view(), &cfg, Some(&x_ref.view()), Some(0.5)).unwrap();
        let st = traj.settle_time.unwrap();
        // crossing between steps 21 (0.9^21*5=0.5464) and 22 (0.4918)
        let e0 = 5.0 * 0.9f64.powi(21);
        let e1 = 5.0 * 0.9f64.powi(22);
        let expect = 2.1 + 0.1 * (e0 - 0.5) / (e0 - e1);
        assert_abs_diff_eq!(st, expect, epsilon = 1e-12);
    }

    #[test]
    fn sweep_runs_all_initial_conditions() {
        let d = LinearDecay { rate: 1.0, dim: 2 };
        let x_ref = arr1(&[0.0, 0.0]);
        let initials: Vec<Array1<f64>> = (1..=4)
            .map(|k| arr1(&[k as f64, 0.0]))
            .collect();
        let cfg = IntegratorConfig::new(0.01, 50.0);
        let out = settle_time_sweep(&d, &initials, &cfg, &x_ref.view(), 1e-3).unwrap();
        assert_eq!(out.len(), 4);
        let times: Vec<f64> = out.iter().map(|s| s.settle_time.unwrap()).collect();
        // larger initial norm settles later for the plain exponential flow
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert_abs_diff_eq!(out[0].initial_norm, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let d = Still { dim: 1 };
        let x0 = arr1(&[0.0]);
        let mut cfg = IntegratorConfig::new(0.0, 1.0);
        assert!(integrate(&d, &x0.view(), &cfg, None, None).is_err());
        cfg = IntegratorConfig::new(0.1, 1.0);
        cfg.record_stride = 0;
        assert!(integrate(&d, &x0.view(), &cfg, None, None).is_err());
        cfg = IntegratorConfig::new(0.1, 1.0);
        let x_bad = arr1(&[0.0, 0.0]);
        assert!(integrate(&d, &x_bad.view(), &cfg, None, None).is_err());
        // settle tolerance without a reference
        assert!(integrate(&d, &x0.view(), &cfg, None, Some(0.1)).is_err());
    }
}

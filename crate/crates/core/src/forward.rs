//! Total-field solver: Nesterov-accelerated gradient descent on
//! `S(u) = 1/2 ||A u - u_in||^2` with `A = I - G diag(f)`.
//!
//! Each iteration costs one forward and one adjoint application of `G`:
//! `A u^k` is carried along the recurrence instead of being recomputed, and
//! `G^H (A s^k - u_in)` is shared between the gradient and the trace.

use crate::error::{check_len, Error, Result};
use crate::field::{norm_sqr, real_times};
use crate::greens::{apply_a, apply_ah, DomainOperator, GreensOperator, SensorOperator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Quantity compared against the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `||g||_2 < tol`, tested before the step.
    #[default]
    GradientNorm,
    /// `S(u^k) < tol`, tested after the step.
    Objective,
}

/// How `delta_tol` is turned into an absolute threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceScale {
    #[default]
    Absolute,
    /// Threshold is `delta_tol * ||u_in||^2`.
    IncidentNormSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// `gamma_k = ||g||^2 / ||A g||^2`.
    #[default]
    Adaptive,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForwardConfig {
    pub max_iters: usize,
    pub delta_tol: f64,
    pub stop_rule: StopRule,
    pub tolerance_scale: ToleranceScale,
    pub step_mode: StepMode,
    /// Disabling momentum pins `mu_k = 0` (plain gradient descent).
    pub momentum: bool,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            max_iters: 120,
            delta_tol: 0.0,
            stop_rule: StopRule::GradientNorm,
            tolerance_scale: ToleranceScale::Absolute,
            step_mode: StepMode::Adaptive,
            momentum: true,
        }
    }
}

impl ForwardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("forward max_iters must be at least 1".into()));
        }
        if !(self.delta_tol >= 0.0) {
            return Err(Error::Config("forward delta_tol must be non-negative".into()));
        }
        if let StepMode::Fixed(nu) = self.step_mode {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::Config("fixed forward step must be positive".into()));
            }
        }
        Ok(())
    }

    fn threshold(&self, u_in: &[Complex64]) -> f64 {
        match self.tolerance_scale {
            ToleranceScale::Absolute => self.delta_tol,
            ToleranceScale::IncidentNormSquared => self.delta_tol * norm_sqr(u_in),
        }
    }
}

/// Everything the backward pass needs from a forward run.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub s_history: Vec<Vec<Complex64>>,
    /// `G^H (A s^k - u_in)` for every iteration.
    pub residual_adjoint: Vec<Vec<Complex64>>,
    pub gamma_history: Vec<f64>,
    pub mu_history: Vec<f64>,
    /// `S(u^k)` after each step.
    pub objective_history: Vec<f64>,
    pub u_hat: Vec<Complex64>,
    /// Predicted scattered field at the requested receivers.
    pub z: Vec<Complex64>,
    pub k_effective: usize,
}

/// Nesterov sequence: returns `(t_k, mu_k)` from `t_{k-1}`.
pub fn nesterov_step(t_prev: f64) -> (f64, f64) {
    let t = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
    (t, (1.0 - t_prev) / t)
}

/// `S(u) = 1/2 ||A u - u_in||^2`.
pub fn scattering_objective(f: &[f64], u: &[Complex64], u_in: &[Complex64], g: &DomainOperator) -> Result<f64> {
    check_len(u.len(), u_in.len())?;
    let au = apply_a(f, u, g)?;
    Ok(0.5 * au.iter().zip(u_in).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>())
}

/// `A^H (A u - u_in)`.
pub fn objective_gradient(
    f: &[f64],
    u: &[Complex64],
    u_in: &[Complex64],
    g: &DomainOperator,
) -> Result<Vec<Complex64>> {
    check_len(u.len(), u_in.len())?;
    let au = apply_a(f, u, g)?;
    let r: Vec<Complex64> = au.iter().zip(u_in).map(|(a, b)| a - b).collect();
    apply_ah(f, &r, g)
}

/// `H (u_hat . f)` on the listed receiver rows.
pub fn predict_scattered(u_hat: &[Complex64], f: &[f64], h: &SensorOperator, rows: &[usize]) -> Result<Vec<Complex64>> {
    check_len(h.cols(), u_hat.len())?;
    check_len(h.cols(), f.len())?;
    h.apply_rows(&real_times(f, u_hat), rows)
}

/// Run the accelerated solver from `u^{-1} = u^0 = u_in`.
pub fn forward_solve(
    f: &[f64],
    u_in: &[Complex64],
    g: &DomainOperator,
    h: &SensorOperator,
    rows: &[usize],
    cfg: &ForwardConfig,
) -> Result<ForwardTrace> {
    forward_solve_from(f, u_in, u_in, g, h, rows, cfg)
}

/// As [`forward_solve`] but starting from `u^{-1} = u^0 = u_init`. The
/// backward pass treats `u_init` as independent of `f`.
pub fn forward_solve_from(
    f: &[f64],
    u_in: &[Complex64],
    u_init: &[Complex64],
    g: &DomainOperator,
    h: &SensorOperator,
    rows: &[usize],
    cfg: &ForwardConfig,
) -> Result<ForwardTrace> {
    cfg.validate()?;
    let n = g.input_len();
    check_len(n, f.len())?;
    check_len(n, u_in.len())?;
    check_len(n, u_init.len())?;
    let tol = cfg.threshold(u_in);

    let mut u_prev = u_init.to_vec();
    let mut au_prev = apply_a(f, &u_prev, g)?;
    let mut u_prev2 = u_prev.clone();
    let mut au_prev2 = au_prev.clone();

    let mut trace = ForwardTrace {
        s_history: Vec::new(),
        residual_adjoint: Vec::new(),
        gamma_history: Vec::new(),
        mu_history: Vec::new(),
        objective_history: Vec::new(),
        u_hat: Vec::new(),
        z: Vec::new(),
        k_effective: 0,
    };
    let mut t_prev = 0.0;
    let mut last_gamma = match cfg.step_mode {
        StepMode::Fixed(nu) => nu,
        StepMode::Adaptive => 1.0,
    };

    for k in 1..=cfg.max_iters {
        let (t, mu_raw) = nesterov_step(t_prev);
        t_prev = t;
        let mu = if cfg.momentum { mu_raw } else { 0.0 };
        let s: Vec<Complex64> = u_prev.iter().zip(&u_prev2).map(|(a, b)| a * (1.0 - mu) + b * mu).collect();
        let a_s: Vec<Complex64> = au_prev.iter().zip(&au_prev2).map(|(a, b)| a * (1.0 - mu) + b * mu).collect();
        let resid: Vec<Complex64> = a_s.iter().zip(u_in).map(|(a, b)| a - b).collect();
        let gh_resid = g.apply_adjoint(&resid)?;
        let grad: Vec<Complex64> = resid.iter().zip(&gh_resid).zip(f).map(|((r, w), fv)| r - w * *fv).collect();
        let grad_sq = norm_sqr(&grad);
        if !grad_sq.is_finite() {
            return Err(Error::NonFinite(format!("forward gradient at iteration {k}")));
        }
        let stop_now = cfg.stop_rule == StopRule::GradientNorm && grad_sq.sqrt() < tol;

        let a_grad = apply_a(f, &grad, g)?;
        let gamma = match cfg.step_mode {
            StepMode::Fixed(nu) => nu,
            StepMode::Adaptive => {
                let ag_sq = norm_sqr(&a_grad);
                if grad_sq == 0.0 {
                    last_gamma
                } else if ag_sq == 0.0 {
                    return Err(Error::StepDegeneracy { iteration: k });
                } else {
                    grad_sq / ag_sq
                }
            }
        };
        last_gamma = gamma;

        let u: Vec<Complex64> = s.iter().zip(&grad).map(|(a, b)| a - b * gamma).collect();
        let au: Vec<Complex64> = a_s.iter().zip(&a_grad).map(|(a, b)| a - b * gamma).collect();
        let objective = 0.5 * au.iter().zip(u_in).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();

        trace.s_history.push(s);
        trace.residual_adjoint.push(gh_resid);
        trace.gamma_history.push(gamma);
        trace.mu_history.push(mu);
        trace.objective_history.push(objective);
        trace.k_effective = k;

        u_prev2 = std::mem::replace(&mut u_prev, u);
        au_prev2 = std::mem::replace(&mut au_prev, au);

        if stop_now || (cfg.stop_rule == StopRule::Objective && objective < tol) {
            break;
        }
    }
    log::debug!(
        "forward solve: {} iterations, final objective {:.3e}",
        trace.k_effective,
        trace.objective_history.last().copied().unwrap_or(0.0)
    );
    trace.z = predict_scattered(&u_prev, f, h, rows)?;
    trace.u_hat = u_prev;
    Ok(trace)
}

/// Power-iteration estimate of `||A||^2 = lambda_max(A^H A)`: at most
/// `max_iters` sweeps, stopping once the relative change drops below `rtol`.
pub fn estimate_lipschitz(f: &[f64], g: &DomainOperator, max_iters: usize, rtol: f64, seed: u64) -> Result<f64> {
    let n = g.input_len();
    check_len(n, f.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let mut est = 0.0;
    for _ in 0..max_iters.max(1) {
        let nv = norm_sqr(&v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let w = apply_ah(f, &apply_a(f, &v, g)?, g)?;
        let next = norm_sqr(&w).sqrt();
        let done = est > 0.0 && ((next - est) / next).abs() < rtol;
        est = next;
        v = w;
        if done {
            break;
        }
    }
    Ok(est)
}

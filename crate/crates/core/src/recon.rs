//! Image formation: accelerated proximal gradient on `D(f) + tau TV(f)`
//! with the nonlinear model or one of the linearized baselines.

use crate::adjoint::gradient_data_fidelity;
use crate::born::{born_gradient, born_predict, rytov_transform};
use crate::error::{Error, Result};
use crate::forward::{forward_solve, ForwardConfig};
use crate::greens::{build_domain_operator, build_sensor_operator, DomainOperator, SensorOperator};
use crate::grid::DomainGrid;
use crate::measurement::MeasurementSet;
use crate::metrics::{normalized_data_fit, normalized_recon_error};
use crate::par;
use crate::tv::{prox_tv, BoxConstraint, TvConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Full multiple-scattering model with the backpropagated gradient.
    #[default]
    Multiple,
    Born,
    /// Born model fitted to Rytov-transformed data.
    Rytov,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconConfig {
    pub model: ModelKind,
    pub forward: ForwardConfig,
    /// `tau = tau_rel * ||y||^2`.
    pub tau_rel: f64,
    /// Fixed step; `None` selects it by backtracking at the first iterate.
    pub step: Option<f64>,
    pub max_iters: usize,
    /// Stop once `||f^t - f^{t-1}|| <= rel_change_tol ||f^{t-1}||`.
    pub rel_change_tol: f64,
    pub tv: TvConfig,
    #[serde(rename = "box")]
    pub bounds: BoxConstraint,
    /// `false` pins the momentum to zero (plain proximal gradient).
    pub accelerate: bool,
    /// Starting image; `None` is the background (zero potential).
    pub init: Option<Vec<f64>>,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            model: ModelKind::Multiple,
            forward: ForwardConfig::default(),
            tau_rel: 1.5e-9,
            step: None,
            max_iters: 50,
            rel_change_tol: 1e-6,
            tv: TvConfig::default(),
            bounds: BoxConstraint::nonnegative(),
            accelerate: true,
            init: None,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        self.forward.validate()?;
        self.bounds.validate()?;
        if !(self.tau_rel >= 0.0 && self.tau_rel.is_finite()) {
            return Err(Error::Config("tau_rel must be non-negative".into()));
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config("FISTA step must be positive".into()));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Config("FISTA needs at least one iteration".into()));
        }
        Ok(())
    }
}

/// Operators, incident fields and data for one reconstruction grid.
pub struct InverseProblem {
    pub grid: DomainGrid,
    pub g: DomainOperator,
    pub h: SensorOperator,
    pub u_in: Vec<Vec<Complex64>>,
    pub rows: Vec<Vec<usize>>,
    /// Data the model is fitted to: `y`, or its Rytov transform.
    pub data: Vec<Vec<Complex64>>,
    pub model: ModelKind,
    /// `||y||^2` of the measured scattered field.
    pub y_norm_sqr: f64,
}

impl InverseProblem {
    pub fn new(grid: &DomainGrid, meas: &MeasurementSet, model: ModelKind) -> Result<Self> {
        meas.validate()?;
        let rel = (meas.wavelength() - grid.wavelength).abs() / grid.wavelength;
        if rel > 1e-9 || meas.background_permittivity != grid.background_permittivity {
            return Err(Error::Config("grid and measurements disagree on the medium".into()));
        }
        let g = build_domain_operator(grid)?;
        let h = build_sensor_operator(grid, &meas.receivers)?;
        let u_in: Vec<Vec<Complex64>> =
            (0..meas.transmitters.len()).map(|t| meas.incident_on_grid(t, grid)).collect::<Result<_>>()?;
        let data = match model {
            ModelKind::Rytov => (0..meas.transmitters.len())
                .map(|t| {
                    let inc = meas.incident_at_receivers(t, grid.ndim())?;
                    let total: Vec<Complex64> = inc.iter().zip(&meas.y[t]).map(|(a, b)| a + b).collect();
                    Ok(rytov_transform(&total, &inc)?.values)
                })
                .collect::<Result<_>>()?,
            _ => meas.y.clone(),
        };
        Ok(InverseProblem {
            grid: grid.clone(),
            g,
            h,
            u_in,
            rows: meas.active.clone(),
            data,
            model,
            y_norm_sqr: meas.norm_sqr(),
        })
    }

    pub fn transmitters(&self) -> usize {
        self.u_in.len()
    }

    /// `1/2 ||data||^2`, the data term at `f = 0`.
    pub fn data_term_at_zero(&self) -> f64 {
        0.5 * self.data.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Predicted data for every transmitter.
    pub fn predict(&self, f: &[f64], cfg: &ForwardConfig) -> Result<Vec<Vec<Complex64>>> {
        par::map_range(self.transmitters(), |t| match self.model {
            ModelKind::Multiple => Ok(forward_solve(f, &self.u_in[t], &self.g, &self.h, &self.rows[t], cfg)?.z),
            _ => born_predict(f, &self.u_in[t], &self.h, &self.rows[t]),
        })
        .into_iter()
        .collect()
    }

    /// Data term and its gradient summed over transmitters. Transmitters run
    /// in parallel; the sum is taken in transmitter order.
    pub fn total_gradient(&self, f: &[f64], cfg: &ForwardConfig) -> Result<(f64, Vec<f64>)> {
        let parts: Vec<Result<(f64, Vec<f64>)>> = par::map_range(self.transmitters(), |t| match self.model {
            ModelKind::Multiple => {
                let d = gradient_data_fidelity(f, &self.data[t], &self.u_in[t], &self.g, &self.h, &self.rows[t], cfg)?;
                Ok((d.value, d.gradient))
            }
            _ => born_gradient(f, &self.data[t], &self.u_in[t], &self.h, &self.rows[t]),
        });
        let mut value = 0.0;
        let mut grad = vec![0.0; f.len()];
        for p in parts {
            let (v, g) = p?;
            value += v;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        Ok((value, grad))
    }

    /// Largest eigenvalue of `J^T J` for the Born Jacobian `J`, the exact
    /// Jacobian of the data at `f = 0`, by power iteration.
    pub fn born_lipschitz(&self, iters: usize, seed: u64) -> Result<f64> {
        let n = self.grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.1).collect();
        let mut est = 0.0;
        for _ in 0..iters {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let parts = par::map_range(self.transmitters(), |t| -> Result<Vec<f64>> {
                let z = born_predict(&v, &self.u_in[t], &self.h, &self.rows[t])?;
                let back = self.h.apply_adjoint_rows(&z, &self.rows[t])?;
                Ok(self.u_in[t].iter().zip(&back).map(|(u, b)| (u.conj() * b).re).collect())
            });
            let mut w = vec![0.0; n];
            for p in parts {
                w.iter_mut().zip(p?).for_each(|(a, b)| *a += b);
            }
            let next = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let done = est > 0.0 && ((next - est) / next).abs() < 1e-4;
            est = next;
            v = w;
            if done {
                break;
            }
        }
        Ok(est)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconReport {
    pub f_hat: Vec<f64>,
    pub step: f64,
    pub tau: f64,
    pub iterations: usize,
    /// `D(f~^{t-1}) / D(0)` at each gradient evaluation.
    pub data_fit_history: Vec<f64>,
    /// `||f^t - f*||^2 / ||f*||^2` when ground truth was supplied.
    pub recon_error_history: Vec<f64>,
    pub seconds_per_iteration: Vec<f64>,
    /// Normalized data fit evaluated at `f_hat`.
    pub final_data_fit: f64,
}

/// Select the step by halving from `4 / L_born` until
/// `D(f0 - s g) <= D(f0) - s/2 ||g||^2`.
pub fn backtrack_step(problem: &InverseProblem, f0: &[f64], cfg: &ForwardConfig) -> Result<f64> {
    let l = problem.born_lipschitz(50, 7)?;
    if !(l > 0.0) {
        return Err(Error::Parameter("measurement operator is identically zero".into()));
    }
    let (d0, g) = problem.total_gradient(f0, cfg)?;
    let gg: f64 = g.iter().map(|v| v * v).sum();
    let mut step = 4.0 / l;
    if gg == 0.0 {
        return Ok(1.0 / l);
    }
    for _ in 0..60 {
        let trial: Vec<f64> = f0.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let pred = problem.predict(&trial, cfg)?;
        let d: f64 = 0.5
            * pred
                .iter()
                .zip(&problem.data)
                .map(|(z, y)| z.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>())
                .sum::<f64>();
        if d <= d0 - 0.5 * step * gg {
            return Ok(step);
        }
        step *= 0.5;
    }
    Err(Error::Parameter("step backtracking did not find a descent step".into()))
}

pub fn fista_reconstruct(
    problem: &InverseProblem,
    cfg: &ReconConfig,
    ground_truth: Option<&[f64]>,
) -> Result<ReconReport> {
    cfg.validate()?;
    let n = problem.grid.len();
    let dims = problem.grid.dims.clone();
    let f0 = match &cfg.init {
        Some(v) => {
            crate::error::check_len(n, v.len())?;
            v.clone()
        }
        None => vec![0.0; n],
    };
    if let Some(gt) = ground_truth {
        crate::error::check_len(n, gt.len())?;
    }
    let step = match cfg.step {
        Some(s) => s,
        None => backtrack_step(problem, &f0, &cfg.forward)?,
    };
    let tau = cfg.tau_rel * problem.y_norm_sqr;
    let weight = step * tau;
    if !weight.is_finite() {
        return Err(Error::Parameter("step times TV weight overflows".into()));
    }
    let d_zero = problem.data_term_at_zero();
    if d_zero == 0.0 {
        log::warn!("all measurements are zero; data fit is reported as 0");
    }
    log::info!("fista: step {step:.3e}, tau {tau:.3e}, model {:?}", problem.model);

    let mut f_prev = f0.clone();
    let mut f_tilde = f0;
    let mut q = 1.0f64;
    let mut dual: Option<Vec<f64>> = None;
    let mut report = ReconReport {
        f_hat: Vec::new(),
        step,
        tau,
        iterations: 0,
        data_fit_history: Vec::new(),
        recon_error_history: Vec::new(),
        seconds_per_iteration: Vec::new(),
        final_data_fit: 0.0,
    };
    for t in 1..=cfg.max_iters {
        let clock = Instant::now();
        let (d, grad) = problem.total_gradient(&f_tilde, &cfg.forward)?;
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("data gradient at FISTA iteration {t}")));
        }
        let v: Vec<f64> = f_tilde.iter().zip(&grad).map(|(a, b)| a - step * b).collect();
        let prox = prox_tv(&v, weight, &dims, &cfg.bounds, &cfg.tv, dual.as_deref())?;
        dual = Some(prox.dual);
        let f = prox.f;
        let q_next = 0.5 * (1.0 + (1.0 + 4.0 * q * q).sqrt());
        let beta = if cfg.accelerate { (q - 1.0) / q_next } else { 0.0 };
        q = q_next;
        f_tilde = f.iter().zip(&f_prev).map(|(a, b)| a + beta * (a - b)).collect();

        report.data_fit_history.push(if d_zero > 0.0 { d / d_zero } else { 0.0 });
        if let Some(gt) = ground_truth {
            report.recon_error_history.push(normalized_recon_error(&f, gt)?);
        }
        report.seconds_per_iteration.push(clock.elapsed().as_secs_f64());
        report.iterations = t;
        log::debug!("fista {t}: data fit {:.4e}", report.data_fit_history.last().unwrap());

        let change: f64 = f.iter().zip(&f_prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let prev_norm: f64 = f_prev.iter().map(|a| a * a).sum::<f64>().sqrt();
        f_prev = f;
        if change <= cfg.rel_change_tol * prev_norm {
            break;
        }
    }
    report.final_data_fit =
        if d_zero > 0.0 { normalized_data_fit(&problem.predict(&f_prev, &cfg.forward)?, &problem.data)? } else { 0.0 };
    report.f_hat = f_prev;
    Ok(report)
}

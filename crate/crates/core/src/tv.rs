//! Total variation with forward differences and a replicate-edge boundary,
//! and its box-constrained proximal operator solved on the dual by fast
//! gradient projection.
//!
//! Gradient fields are stored component-major: `g[d * n + i]` is the
//! difference along axis `d` at pixel `i`.

use crate::error::{check_len, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TvVariant {
    #[default]
    Isotropic,
    Anisotropic,
}

/// Componentwise bounds `lower <= f <= upper`; either side may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxConstraint {
    #[serde(serialize_with = "bound::ser", deserialize_with = "bound::lower", default = "neg_inf")]
    pub lower: f64,
    #[serde(serialize_with = "bound::ser", deserialize_with = "bound::upper", default = "pos_inf")]
    pub upper: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

/// JSON has no infinities; unbounded sides are written as `null`.
mod bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn ser<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn lower<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }

    pub fn upper<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl BoxConstraint {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let b = BoxConstraint { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn unbounded() -> Self {
        BoxConstraint { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }

    /// `f >= 0`: permittivity never below the background.
    pub fn nonnegative() -> Self {
        BoxConstraint { lower: 0.0, upper: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_nan() || self.upper.is_nan() || self.lower > self.upper {
            return Err(Error::Parameter(format!("invalid box [{}, {}]", self.lower, self.upper)));
        }
        Ok(())
    }
}

impl Default for BoxConstraint {
    fn default() -> Self {
        BoxConstraint::nonnegative()
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * dims[d + 1];
    }
    s
}

/// Whether pixel `i` has a neighbour at `+1` along axis `d`.
fn has_next(i: usize, d: usize, dims: &[usize], strides: &[usize]) -> bool {
    (i / strides[d]) % dims[d] + 1 < dims[d]
}

/// Forward differences `D f`, zero across the far edge of every axis.
pub fn grad_op(f: &[f64], dims: &[usize]) -> Result<Vec<f64>> {
    let n: usize = dims.iter().product();
    check_len(n, f.len())?;
    let st = strides(dims);
    let mut out = vec![0.0; n * dims.len()];
    for d in 0..dims.len() {
        for i in 0..n {
            if has_next(i, d, dims, &st) {
                out[d * n + i] = f[i + st[d]] - f[i];
            }
        }
    }
    Ok(out)
}

/// `D^T g`, the negative divergence.
pub fn grad_adjoint(g: &[f64], dims: &[usize]) -> Result<Vec<f64>> {
    let n: usize = dims.iter().product();
    check_len(n * dims.len(), g.len())?;
    let st = strides(dims);
    let mut out = vec![0.0; n];
    for d in 0..dims.len() {
        for i in 0..n {
            if has_next(i, d, dims, &st) {
                let v = g[d * n + i];
                out[i] -= v;
                out[i + st[d]] += v;
            }
        }
    }
    Ok(out)
}

/// Unweighted TV; callers multiply by the regularization weight.
pub fn tv_value(f: &[f64], dims: &[usize], variant: TvVariant) -> Result<f64> {
    let g = grad_op(f, dims)?;
    let n = f.len();
    let nd = dims.len();
    Ok((0..n)
        .map(|i| match variant {
            TvVariant::Isotropic => (0..nd).map(|d| g[d * n + i].powi(2)).sum::<f64>().sqrt(),
            TvVariant::Anisotropic => (0..nd).map(|d| g[d * n + i].abs()).sum(),
        })
        .sum())
}

pub fn proj_box(f: &[f64], b: &BoxConstraint) -> Vec<f64> {
    f.iter().map(|v| v.max(b.lower).min(b.upper)).collect()
}

/// Projection onto the dual unit ball: per component (anisotropic) or per
/// pixel vector (isotropic).
pub fn proj_dual(g: &[f64], ndim: usize, variant: TvVariant) -> Vec<f64> {
    let mut out = g.to_vec();
    match variant {
        TvVariant::Anisotropic => {
            for v in &mut out {
                *v /= v.abs().max(1.0);
            }
        }
        TvVariant::Isotropic => {
            let n = g.len() / ndim;
            for i in 0..n {
                let norm = (0..ndim).map(|d| g[d * n + i].powi(2)).sum::<f64>().sqrt();
                let s = norm.max(1.0);
                for d in 0..ndim {
                    out[d * n + i] /= s;
                }
            }
        }
    }
    out
}

/// `Q(g) = 1/2 ||w||^2 - 1/2 ||w - P(w)||^2` with `w = z - tau D^T g`; the
/// dual is to minimize `Q` over the unit ball, and `1/2 ||z||^2 - Q(g)` is a
/// lower bound on the primal objective.
pub fn dual_objective(g: &[f64], z: &[f64], tau: f64, dims: &[usize], b: &BoxConstraint) -> Result<f64> {
    let dtg = grad_adjoint(g, dims)?;
    let w: Vec<f64> = z.iter().zip(&dtg).map(|(a, c)| a - tau * c).collect();
    let p = proj_box(&w, b);
    let ww: f64 = w.iter().map(|v| v * v).sum();
    let dist: f64 = w.iter().zip(&p).map(|(a, c)| (a - c).powi(2)).sum();
    Ok(0.5 * ww - 0.5 * dist)
}

/// `1/2 ||f - z||^2 + tau TV(f)`.
pub fn prox_objective(f: &[f64], z: &[f64], tau: f64, dims: &[usize], variant: TvVariant) -> Result<f64> {
    check_len(z.len(), f.len())?;
    let fit: f64 = f.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(0.5 * fit + tau * tv_value(f, dims, variant)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TvConfig {
    pub variant: TvVariant,
    pub max_iters: usize,
    /// Relative dual change that ends the inner loop; 0 disables the test.
    pub delta_in: f64,
    /// The dual step is `1 / (step_denominator * tau)`.
    pub step_denominator: f64,
}

impl Default for TvConfig {
    fn default() -> Self {
        TvConfig { variant: TvVariant::Isotropic, max_iters: 10, delta_in: 1e-4, step_denominator: 12.0 }
    }
}

#[derive(Clone, Debug)]
pub struct ProxResult {
    pub f: Vec<f64>,
    /// Final dual iterate, for warm starts.
    pub dual: Vec<f64>,
    pub iterations: usize,
}

/// `argmin_{f in box} 1/2 ||f - z||^2 + tau TV(f)`. A supplied `warm`
/// dual field seeds the iteration; otherwise it starts from zero.
pub fn prox_tv(
    z: &[f64],
    tau: f64,
    dims: &[usize],
    b: &BoxConstraint,
    cfg: &TvConfig,
    warm: Option<&[f64]>,
) -> Result<ProxResult> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Parameter(format!("TV weight must be non-negative, got {tau}")));
    }
    b.validate()?;
    let n: usize = dims.iter().product();
    check_len(n, z.len())?;
    let nd = dims.len();
    let mut g = match warm {
        Some(w) => {
            check_len(n * nd, w.len())?;
            w.to_vec()
        }
        None => vec![0.0; n * nd],
    };
    if tau == 0.0 {
        return Ok(ProxResult { f: proj_box(z, b), dual: g, iterations: 0 });
    }
    let step = 1.0 / (cfg.step_denominator * tau);
    let primal = |g: &[f64]| -> Result<Vec<f64>> {
        let dtg = grad_adjoint(g, dims)?;
        Ok(proj_box(&z.iter().zip(&dtg).map(|(a, c)| a - tau * c).collect::<Vec<_>>(), b))
    };
    let mut g_tilde = g.clone();
    let mut q = 1.0f64;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters.max(1) {
        iterations += 1;
        let df = grad_op(&primal(&g_tilde)?, dims)?;
        let ascent: Vec<f64> = g_tilde.iter().zip(&df).map(|(a, c)| a + step * c).collect();
        let g_next = proj_dual(&ascent, nd, cfg.variant);
        let q_next = 0.5 * (1.0 + (1.0 + 4.0 * q * q).sqrt());
        let beta = (q - 1.0) / q_next;
        let mut change = 0.0;
        let mut prev = 0.0;
        for i in 0..g.len() {
            let d = g_next[i] - g[i];
            change += d * d;
            prev += g[i] * g[i];
            g_tilde[i] = g_next[i] + beta * d;
        }
        g = g_next;
        q = q_next;
        if cfg.delta_in > 0.0 && prev > 0.0 && (change / prev).sqrt() <= cfg.delta_in {
            break;
        }
    }
    Ok(ProxResult { f: primal(&g)?, dual: g, iterations })
}

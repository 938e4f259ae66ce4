//! Closed-form fields of a point source outside a homogeneous cylinder (2D)
//! or sphere (3D), as series in angular harmonics. The source sits on the
//! `theta = 0` axis at distance `r_s` from the object center, and the field
//! solves `lap E + k^2 E = -delta(r - r_s)`, so with `n = 1` it reduces to the
//! free-space Green's function.

use crate::error::{Error, Result};
use crate::grid::{DomainGrid, Point};
use crate::special::{
    bessel_j_int, bessel_j_orders, bessel_y_int, bessel_y_orders, legendre_orders, spherical_j_orders,
    spherical_y_orders,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticScene {
    /// Object radius (m).
    pub radius: f64,
    /// Refractive index `sqrt(eps / eps_b)`.
    pub index: f64,
    /// Source distance from the object center (m).
    pub source_distance: f64,
    /// Background wavenumber (1/m).
    pub k_b: f64,
    /// Highest harmonic order kept.
    pub truncation: usize,
}

impl AnalyticScene {
    /// Scene with the default truncation `ceil(k_b radius) + 30`.
    pub fn new(radius: f64, index: f64, source_distance: f64, k_b: f64) -> Result<Self> {
        let s = AnalyticScene { radius, index, source_distance, k_b, truncation: default_truncation(k_b, radius) };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.source_distance > self.radius && self.radius > 0.0) {
            return Err(Error::Parameter("need source_distance > radius > 0".into()));
        }
        if !(self.index > 0.0 && self.k_b > 0.0) || self.truncation < 1 {
            return Err(Error::Parameter("need index > 0, k_b > 0 and truncation >= 1".into()));
        }
        Ok(())
    }

    /// Index for a given potential contrast `f / k_b^2`.
    pub fn index_for_contrast(contrast: f64) -> f64 {
        (1.0 + contrast).sqrt()
    }

    /// Whether `r` (distance from the object center) or the distance to the
    /// source falls inside a band of half-width `band` around a discontinuity.
    pub fn near_discontinuity(&self, r: f64, source_dist: f64, band: f64) -> bool {
        (r - self.radius).abs() < band || source_dist < band
    }
}

pub fn default_truncation(k_b: f64, radius: f64) -> usize {
    (k_b * radius).ceil() as usize + 30
}

/// A series value with its convergence flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    /// False when both of the last two terms exceed `1e-8` of the sum.
    pub converged: bool,
}

fn hankel(m: i64, x: f64) -> Complex64 {
    Complex64::new(bessel_j_int(m, x), bessel_y_int(m, x))
}

/// `(a_m, b_m, c_m)` of the cylinder series for signed order `m`.
pub fn radial_coeffs_2d(m: i64, scene: &AnalyticScene) -> Result<(Complex64, Complex64, Complex64)> {
    if m.unsigned_abs() as usize > scene.truncation {
        return Err(Error::Parameter(format!("order {m} beyond truncation")));
    }
    let rho = scene.k_b * scene.radius;
    let n = scene.index;
    let jn = bessel_j_int(m, n * rho);
    let jn1 = n * bessel_j_int(m - 1, n * rho);
    let delta = jn * hankel(m - 1, rho) - jn1 * hankel(m, rho);
    if delta.norm() == 0.0 || !delta.is_finite() {
        return Err(Error::ResonanceDegeneracy { order: m });
    }
    let a = -1.0 / (rho * delta);
    let b = -PI / (2.0 * delta) * (jn * bessel_y_int(m - 1, rho) - jn1 * bessel_y_int(m, rho));
    let c = PI / (2.0 * delta) * (jn * bessel_j_int(m - 1, rho) - jn1 * bessel_j_int(m, rho));
    Ok((a, b, c))
}

/// `(A_l, B_l, C_l)` of the sphere series.
pub fn radial_coeffs_3d(l: usize, scene: &AnalyticScene) -> Result<(Complex64, Complex64, Complex64)> {
    if l > scene.truncation {
        return Err(Error::Parameter(format!("order {l} beyond truncation")));
    }
    let rho = scene.k_b * scene.radius;
    let n = scene.index;
    let jin = spherical_j_orders(l + 1, n * rho);
    let jout = spherical_j_orders(l + 1, rho);
    let yout = spherical_y_orders(l + 1, rho);
    let (a0, a1) = (jin[l], n * jin[l + 1]);
    let h = |i: usize| Complex64::new(jout[i], yout[i]);
    let d = a0 * h(l + 1) - a1 * h(l);
    if d.norm() == 0.0 || !d.is_finite() {
        return Err(Error::ResonanceDegeneracy { order: l as i64 });
    }
    let k = scene.k_b;
    let big_a = k / (rho * rho * d);
    let big_b = -k / d * (a0 * yout[l + 1] - a1 * yout[l]);
    let big_c = k / d * (a0 * jout[l + 1] - a1 * jout[l]);
    Ok((big_a, big_b, big_c))
}

fn convergence(terms: &[Complex64], sum: Complex64) -> bool {
    let tol = 1e-8 * sum.norm();
    let k = terms.len();
    k < 2 || !(terms[k - 1].norm() > tol && terms[k - 2].norm() > tol)
}

/// Precomputed cylinder series for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CylinderSeries {
    scene: AnalyticScene,
    coeffs: Vec<(Complex64, Complex64, Complex64)>,
    h_src: Vec<Complex64>,
    /// `b_m J_m(rho_s) + c_m Y_m(rho_s)`.
    outer: Vec<Complex64>,
}

impl CylinderSeries {
    pub fn new(scene: &AnalyticScene) -> Result<Self> {
        scene.validate()?;
        let m_max = scene.truncation;
        let coeffs = (0..=m_max as i64).map(|m| radial_coeffs_2d(m, scene)).collect::<Result<Vec<_>>>()?;
        let rho_s = scene.k_b * scene.source_distance;
        let js = bessel_j_orders(m_max, rho_s);
        let ys = bessel_y_orders(m_max, rho_s);
        let h_src = js.iter().zip(&ys).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let outer = coeffs.iter().enumerate().map(|(m, (_, b, c))| b * js[m] + c * ys[m]).collect();
        Ok(CylinderSeries { scene: scene.clone(), coeffs, h_src, outer })
    }

    /// Radial factors `R_m(r)` for `m = 0..=truncation`.
    pub fn radial(&self, r: f64) -> Vec<Complex64> {
        let s = &self.scene;
        let m_max = s.truncation;
        let rho = s.k_b * r;
        if r < s.radius {
            let jv = bessel_j_orders(m_max, s.index * rho);
            (0..=m_max).map(|m| self.coeffs[m].0 * jv[m] * self.h_src[m]).collect()
        } else if r < s.source_distance {
            let jv = bessel_j_orders(m_max, rho);
            let yv = bessel_y_orders(m_max, rho);
            (0..=m_max).map(|m| (self.coeffs[m].1 * jv[m] + self.coeffs[m].2 * yv[m]) * self.h_src[m]).collect()
        } else {
            let jv = bessel_j_orders(m_max, rho);
            let yv = bessel_y_orders(m_max, rho);
            (0..=m_max).map(|m| self.outer[m] * Complex64::new(jv[m], yv[m])).collect()
        }
    }

    /// Field at polar coordinates `(r, theta)` about the object center.
    pub fn field(&self, r: f64, theta: f64) -> SeriesValue {
        let radial = self.radial(r);
        // R_{-m} = R_m, so the +m and -m terms pair into a cosine.
        let terms: Vec<Complex64> = radial
            .iter()
            .enumerate()
            .map(|(m, rm)| {
                let w = if m == 0 { 1.0 } else { 2.0 * (m as f64 * theta).cos() };
                rm * w / (2.0 * PI)
            })
            .collect();
        let value: Complex64 = terms.iter().sum();
        SeriesValue { value, converged: convergence(&terms, value) }
    }
}

/// Precomputed sphere series.
#[derive(Clone, Debug)]
pub struct SphereSeries {
    scene: AnalyticScene,
    coeffs: Vec<(Complex64, Complex64, Complex64)>,
    h_src: Vec<Complex64>,
    outer: Vec<Complex64>,
}

impl SphereSeries {
    pub fn new(scene: &AnalyticScene) -> Result<Self> {
        scene.validate()?;
        let l_max = scene.truncation;
        let coeffs = (0..=l_max).map(|l| radial_coeffs_3d(l, scene)).collect::<Result<Vec<_>>>()?;
        let rho_s = scene.k_b * scene.source_distance;
        let js = spherical_j_orders(l_max, rho_s);
        let ys = spherical_y_orders(l_max, rho_s);
        let h_src = js.iter().zip(&ys).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let outer = coeffs.iter().enumerate().map(|(l, (_, b, c))| b * js[l] + c * ys[l]).collect();
        Ok(SphereSeries { scene: scene.clone(), coeffs, h_src, outer })
    }

    pub fn radial(&self, r: f64) -> Vec<Complex64> {
        let s = &self.scene;
        let l_max = s.truncation;
        let rho = s.k_b * r;
        if r < s.radius {
            let jv = spherical_j_orders(l_max, s.index * rho);
            (0..=l_max).map(|l| self.coeffs[l].0 * jv[l] * self.h_src[l]).collect()
        } else if r < s.source_distance {
            let jv = spherical_j_orders(l_max, rho);
            let yv = spherical_y_orders(l_max, rho);
            (0..=l_max).map(|l| (self.coeffs[l].1 * jv[l] + self.coeffs[l].2 * yv[l]) * self.h_src[l]).collect()
        } else {
            let jv = spherical_j_orders(l_max, rho);
            let yv = spherical_y_orders(l_max, rho);
            (0..=l_max).map(|l| self.outer[l] * Complex64::new(jv[l], yv[l])).collect()
        }
    }

    /// Field at radius `r` and polar angle `theta` from the source axis.
    pub fn field(&self, r: f64, theta: f64) -> SeriesValue {
        let radial = self.radial(r);
        let p = legendre_orders(self.scene.truncation, theta.cos());
        let terms: Vec<Complex64> =
            radial.iter().enumerate().map(|(l, rl)| rl * ((2 * l + 1) as f64 / (4.0 * PI) * p[l])).collect();
        let value: Complex64 = terms.iter().sum();
        SeriesValue { value, converged: convergence(&terms, value) }
    }
}

pub fn analytic_field_2d(r: f64, theta: f64, scene: &AnalyticScene) -> Result<SeriesValue> {
    if r == scene.source_distance && theta.cos() == 1.0 {
        return Err(Error::Singularity);
    }
    Ok(CylinderSeries::new(scene)?.field(r, theta))
}

pub fn analytic_field_3d(r: f64, theta: f64, scene: &AnalyticScene) -> Result<SeriesValue> {
    if r == scene.source_distance && theta.cos() == 1.0 {
        return Err(Error::Singularity);
    }
    Ok(SphereSeries::new(scene)?.field(r, theta))
}

/// Sample the cylinder field on every pixel of a 2D grid whose object center
/// is `center`, with the source at `center + (r_s, 0)`.
pub fn cylinder_field_on_grid(
    scene: &AnalyticScene,
    grid: &DomainGrid,
    center: Point,
) -> Result<(Vec<Complex64>, bool)> {
    let series = CylinderSeries::new(scene)?;
    let vals = crate::par::map_slice(&grid.positions(), |p| {
        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
        series.field(dx.hypot(dy), dy.atan2(dx))
    });
    let converged = vals.iter().all(|v| v.converged);
    Ok((vals.into_iter().map(|v| v.value).collect(), converged))
}

/// Max over interior pixels of `|lap E + k^2 E| / |k^2 E|`, with the
/// Laplacian taken by second-order central differences at the grid spacing.
/// Pixels where `exclude` holds are skipped.
pub fn helmholtz_residual<S, K, X>(sampler: S, k2: K, grid: &DomainGrid, exclude: X) -> f64
where
    S: Fn(&Point) -> Complex64 + Sync,
    K: Fn(&Point) -> f64 + Sync,
    X: Fn(&Point) -> bool + Sync,
{
    let h = grid.spacing;
    let nd = grid.ndim();
    let per_pixel = crate::par::map_range(grid.len(), |i| {
        let idx = grid.multi_index(i);
        if idx.iter().zip(&grid.dims).any(|(&a, &n)| a == 0 || a + 1 >= n) {
            return 0.0;
        }
        let p = grid.position(i);
        if exclude(&p) {
            return 0.0;
        }
        let centre = sampler(&p);
        let mut lap = -2.0 * nd as f64 * centre;
        for d in 0..nd {
            for s in [-1.0, 1.0] {
                let mut q = p;
                q[d] += s * h;
                lap += sampler(&q);
            }
        }
        lap /= h * h;
        let k2e = centre * k2(&p);
        let num = (lap + k2e).norm();
        if num == 0.0 {
            0.0
        } else {
            num / k2e.norm()
        }
    });
    per_pixel.into_iter().fold(0.0, f64::max)
}

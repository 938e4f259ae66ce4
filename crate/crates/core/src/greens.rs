//! Green's functions of the Helmholtz operator and their discretizations on
//! the imaging grid.
//!
//! Off-diagonal interactions use the midpoint value times the pixel measure.
//! The self-interaction entry is the exact integral of `g` over a disk (2D)
//! or ball (3D) with the same measure as one pixel.

use crate::error::{check_len, Error, Result};
use crate::fft::FftNd;
use crate::grid::{distance, DomainGrid, Point, SensorSet};
use crate::par;
use crate::special::{hankel1_0, hankel1_1};
use num_complex::Complex64;
use std::f64::consts::PI;

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn norm(r: &Point) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// 2D outgoing Green's function `(j/4) H_0^(1)(k_b |r|)`.
pub fn green_2d(r: &Point, k_b: f64) -> Result<Complex64> {
    green_2d_radial(norm(r), k_b)
}

pub fn green_2d_radial(dist: f64, k_b: f64) -> Result<Complex64> {
    if dist <= 0.0 {
        return Err(Error::Singularity);
    }
    Ok(0.25 * J * hankel1_0(k_b * dist))
}

/// 3D outgoing Green's function `exp(j k_b |r|) / (4 pi |r|)`.
pub fn green_3d(r: &Point, k_b: f64) -> Result<Complex64> {
    green_3d_radial(norm(r), k_b)
}

pub fn green_3d_radial(dist: f64, k_b: f64) -> Result<Complex64> {
    if dist <= 0.0 {
        return Err(Error::Singularity);
    }
    Ok(Complex64::from_polar(1.0 / (4.0 * PI * dist), k_b * dist))
}

/// Green's function for a `dim`-dimensional problem.
pub fn green(dim: usize, r: &Point, k_b: f64) -> Result<Complex64> {
    match dim {
        2 => green_2d(r, k_b),
        _ => green_3d(r, k_b),
    }
}

/// Integral of the 2D Green's function over a disk of area `area`.
pub fn self_term_2d(k_b: f64, area: f64) -> Complex64 {
    let a = (area / PI).sqrt();
    J * (PI * a / (2.0 * k_b)) * hankel1_1(k_b * a) - 1.0 / (k_b * k_b)
}

/// Integral of the 3D Green's function over a ball of volume `volume`.
pub fn self_term_3d(k_b: f64, volume: f64) -> Complex64 {
    let a = (3.0 * volume / (4.0 * PI)).cbrt();
    let ka = k_b * a;
    if ka < 1.0 {
        // int_0^a r exp(j k r) dr = sum_n (j k)^n a^(n+2) / (n! (n+2))
        let mut term = Complex64::new(a * a, 0.0);
        let mut sum = term / 2.0;
        for n in 1..40 {
            term *= J * ka / n as f64;
            sum += term / (n + 2) as f64;
        }
        return sum;
    }
    ((1.0 - J * ka) * Complex64::from_polar(1.0, ka) - 1.0) / (k_b * k_b)
}

/// Interaction weight between pixels separated by `offset` (in pixels).
pub fn interaction(grid: &DomainGrid, offset: &[i64]) -> Complex64 {
    let k_b = grid.background_wavenumber();
    let measure = grid.pixel_measure();
    if offset.iter().all(|&o| o == 0) {
        return match grid.ndim() {
            2 => self_term_2d(k_b, measure),
            _ => self_term_3d(k_b, measure),
        };
    }
    let mut r = [0.0; 3];
    for (d, &o) in offset.iter().enumerate() {
        r[d] = o as f64 * grid.spacing;
    }
    green(grid.ndim(), &r, k_b).expect("nonzero offset") * measure
}

/// A linear operator together with its adjoint.
pub trait GreensOperator: Send + Sync {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>>;
    fn apply_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>>;
}

/// Domain-to-domain operator `G`, applied as a linear convolution on a grid
/// zero-padded to twice the extent per axis.
#[derive(Debug)]
pub struct DomainOperator {
    grid: DomainGrid,
    padded: Vec<usize>,
    fft: FftNd,
    spectrum: Vec<Complex64>,
}

/// Build `G` for `grid`.
pub fn build_domain_operator(grid: &DomainGrid) -> Result<DomainOperator> {
    grid.validate()?;
    if grid.dims.iter().any(|&n| n < 2) {
        return Err(Error::Config("domain operator needs at least 2 pixels per axis".into()));
    }
    let padded: Vec<usize> = grid.dims.iter().map(|n| 2 * n).collect();
    let total: usize = padded.iter().product();
    let mut kernel = vec![Complex64::new(0.0, 0.0); total];
    let unravel = |mut l: usize| {
        let mut idx = vec![0usize; padded.len()];
        for d in (0..padded.len()).rev() {
            idx[d] = l % padded[d];
            l /= padded[d];
        }
        idx
    };
    par::fill_indexed(&mut kernel, |l| {
        let idx = unravel(l);
        let mut offset = Vec::with_capacity(idx.len());
        for (d, &i) in idx.iter().enumerate() {
            let n = grid.dims[d];
            // Slot n is the unused wrap point between +(n-1) and -(n-1).
            if i == n {
                return Complex64::new(0.0, 0.0);
            }
            offset.push(if i < n { i as i64 } else { i as i64 - padded[d] as i64 });
        }
        interaction(grid, &offset)
    });
    let fft = FftNd::new(&padded);
    fft.forward(&mut kernel);
    Ok(DomainOperator { grid: grid.clone(), padded, fft, spectrum: kernel })
}

impl DomainOperator {
    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    fn convolve(&self, v: &[Complex64], adjoint: bool) -> Result<Vec<Complex64>> {
        check_len(self.grid.len(), v.len())?;
        let nd = self.grid.ndim();
        let total: usize = self.padded.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        // Row-major embedding: only the last axis is contiguous.
        let row = self.grid.dims[nd - 1];
        let padded_row = self.padded[nd - 1];
        let rows = self.grid.len() / row;
        for r in 0..rows {
            let dst = self.padded_offset(r);
            buf[dst..dst + row].copy_from_slice(&v[r * row..(r + 1) * row]);
        }
        self.fft.forward(&mut buf);
        let scale = 1.0 / total as f64;
        let spectrum = &self.spectrum;
        par::for_each_chunk_mut(&mut buf, padded_row, |c, chunk| {
            let base = c * padded_row;
            for (i, b) in chunk.iter_mut().enumerate() {
                let k = spectrum[base + i];
                *b *= if adjoint { k.conj() } else { k } * scale;
            }
        });
        self.fft.inverse(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for r in 0..rows {
            let src = self.padded_offset(r);
            out[r * row..(r + 1) * row].copy_from_slice(&buf[src..src + row]);
        }
        Ok(out)
    }

    /// Offset in the padded buffer of the start of unpadded row `r`.
    fn padded_offset(&self, mut r: usize) -> usize {
        let nd = self.grid.ndim();
        let mut offset = 0;
        let mut stride = self.padded[nd - 1];
        for d in (0..nd - 1).rev() {
            let i = r % self.grid.dims[d];
            r /= self.grid.dims[d];
            offset += i * stride;
            stride *= self.padded[d];
        }
        offset
    }
}

impl GreensOperator for DomainOperator {
    fn input_len(&self) -> usize {
        self.grid.len()
    }

    fn output_len(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.convolve(v, false)
    }

    fn apply_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.convolve(v, true)
    }
}

/// Dense domain-to-sensor operator `H`.
#[derive(Clone, Debug)]
pub struct SensorOperator {
    rows: usize,
    cols: usize,
    matrix: Vec<Complex64>,
}

/// Build `H`: entry (m, n) is `g(x_m - x_n)` times the pixel measure.
pub fn build_sensor_operator(grid: &DomainGrid, sensors: &SensorSet) -> Result<SensorOperator> {
    grid.validate()?;
    sensors.warn_if_inside(grid);
    let k_b = grid.background_wavenumber();
    let measure = grid.pixel_measure();
    let positions = grid.positions();
    let tiny = 1e-9 * grid.spacing;
    for s in &sensors.positions {
        if positions.iter().any(|p| distance(s, p) <= tiny) {
            return Err(Error::Singularity);
        }
    }
    let cols = grid.len();
    let mut matrix = vec![Complex64::new(0.0, 0.0); sensors.len() * cols];
    par::for_each_chunk_mut(&mut matrix, cols, |m, row| {
        let s = sensors.positions[m];
        for (n, entry) in row.iter_mut().enumerate() {
            let p = positions[n];
            let r = [s[0] - p[0], s[1] - p[1], s[2] - p[2]];
            *entry = green(grid.ndim(), &r, k_b).expect("checked separation") * measure;
        }
    });
    Ok(SensorOperator { rows: sensors.len(), cols, matrix })
}

impl SensorOperator {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.cols + col]
    }

    /// `H v` restricted to the listed sensor rows.
    pub fn apply_rows(&self, v: &[Complex64], rows: &[usize]) -> Result<Vec<Complex64>> {
        check_len(self.cols, v.len())?;
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::Dimension { expected: self.rows, got: bad + 1 });
        }
        Ok(par::map_slice(rows, |&r| {
            let row = &self.matrix[r * self.cols..(r + 1) * self.cols];
            row.iter().zip(v).map(|(h, x)| h * x).sum()
        }))
    }

    /// `H^H y` where `y` holds values for the listed sensor rows.
    pub fn apply_adjoint_rows(&self, y: &[Complex64], rows: &[usize]) -> Result<Vec<Complex64>> {
        check_len(rows.len(), y.len())?;
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::Dimension { expected: self.rows, got: bad + 1 });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        let block = 256;
        par::for_each_chunk_mut(&mut out, block, |b, chunk| {
            let start = b * block;
            for (&r, yv) in rows.iter().zip(y) {
                let row = &self.matrix[r * self.cols + start..r * self.cols + start + chunk.len()];
                for (o, h) in chunk.iter_mut().zip(row) {
                    *o += h.conj() * yv;
                }
            }
        });
        Ok(out)
    }

    pub fn all_rows(&self) -> Vec<usize> {
        (0..self.rows).collect()
    }
}

impl GreensOperator for SensorOperator {
    fn input_len(&self) -> usize {
        self.cols
    }

    fn output_len(&self) -> usize {
        self.rows
    }

    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_rows(v, &self.all_rows())
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_adjoint_rows(y, &self.all_rows())
    }
}

/// `A u = u - G (f . u)`.
pub fn apply_a(f: &[f64], u: &[Complex64], g: &DomainOperator) -> Result<Vec<Complex64>> {
    check_len(g.input_len(), f.len())?;
    check_len(g.input_len(), u.len())?;
    let fu: Vec<Complex64> = f.iter().zip(u).map(|(a, b)| b * *a).collect();
    let gfu = g.apply(&fu)?;
    Ok(u.iter().zip(gfu).map(|(a, b)| a - b).collect())
}

/// `A^H u = u - f . (G^H u)`; `f` is real so `diag(f)^H = diag(f)`.
pub fn apply_ah(f: &[f64], u: &[Complex64], g: &DomainOperator) -> Result<Vec<Complex64>> {
    check_len(g.input_len(), f.len())?;
    check_len(g.input_len(), u.len())?;
    let ghu = g.apply_adjoint(u)?;
    Ok(u.iter().zip(f).zip(ghu).map(|((a, fv), b)| a - b * *fv).collect())
}

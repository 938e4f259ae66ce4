//! Shared fixtures for unit tests: small grids and dense reference matrices.

use crate::greens::{build_domain_operator, build_sensor_operator, green_2d, self_term_2d};
use crate::greens::{DomainOperator, SensorOperator};
use crate::grid::{DomainGrid, SensorSet};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<Complex64>>;

pub struct Fixture {
    pub grid: DomainGrid,
    pub g: DomainOperator,
    pub h: SensorOperator,
    pub rows: Vec<usize>,
}

pub fn fixture(n: usize, sensors: usize) -> Fixture {
    let lambda = 0.0749;
    let grid = DomainGrid::centered(vec![n, n], lambda / 16.0, lambda, 1.0).unwrap();
    let g = build_domain_operator(&grid).unwrap();
    let ring = SensorSet::ring(grid.center(), 3.0 * lambda, sensors, 0.1).unwrap();
    let h = build_sensor_operator(&grid, &ring).unwrap();
    let rows = h.all_rows();
    Fixture { grid, g, h, rows }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Nonnegative potential with entries uniform in `[0, contrast k_b^2]`.
pub fn random_potential(rng: &mut ChaCha8Rng, grid: &DomainGrid, contrast: f64) -> Vec<f64> {
    let kb2 = grid.background_wavenumber().powi(2);
    (0..grid.len()).map(|_| contrast * kb2 * rng.gen::<f64>()).collect()
}

/// Plane wave travelling along +x.
pub fn plane_wave(grid: &DomainGrid) -> Vec<Complex64> {
    let kb = grid.background_wavenumber();
    grid.positions().iter().map(|p| Complex64::from_polar(1.0, kb * p[0])).collect()
}

/// Dense 2D `G` from per-entry Green's function evaluations.
pub fn dense_g(grid: &DomainGrid) -> Dense {
    let n = grid.len();
    let k_b = grid.background_wavenumber();
    let w = grid.pixel_measure();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return self_term_2d(k_b, w);
                    }
                    let (a, b) = (grid.position(i), grid.position(j));
                    green_2d(&[a[0] - b[0], a[1] - b[1], 0.0], k_b).unwrap() * w
                })
                .collect()
        })
        .collect()
}

/// `I - G diag(f)`.
pub fn dense_a(gm: &Dense, f: &[f64]) -> Dense {
    (0..f.len())
        .map(|i| {
            (0..f.len())
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    Complex64::new(id, 0.0) - gm[i][j] * f[j]
                })
                .collect()
        })
        .collect()
}

pub fn matvec(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn matvec_h(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    let cols = m[0].len();
    (0..cols).map(|j| m.iter().zip(v).map(|(row, x)| row[j].conj() * x).sum()).collect()
}

pub fn dense_h(h: &SensorOperator) -> Dense {
    (0..h.rows()).map(|r| (0..h.cols()).map(|c| h.entry(r, c)).collect()).collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn rel_err_c(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

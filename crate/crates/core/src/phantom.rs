//! Test objects rendered as scattering potentials `f = contrast * k_b^2`.
//! Edges use subpixel coverage so a phantom rendered on a refined grid
//! averages back to the coarse rendering.

use crate::error::{Error, Result};
use crate::grid::{DomainGrid, Point};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Subsamples per axis used to estimate pixel coverage.
const COVERAGE_SAMPLES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    /// Center relative to the grid center (m).
    pub center_m: [f64; 2],
    pub radius_m: f64,
    /// Peak `f / k_b^2` inside the cylinder.
    pub contrast: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomSpec {
    /// Homogeneous background, `f = 0`.
    Empty,
    Cylinders {
        cylinders: Vec<Cylinder>,
    },
    /// Ten-ellipse head phantom whose outer ellipse spans `extent` of the
    /// grid half-width, scaled so its peak equals `contrast`.
    SheppLogan {
        contrast: f64,
        #[serde(default = "default_extent")]
        extent: f64,
    },
    /// CSV image with an `f` column (already a potential, 1/m^2) in grid
    /// order.
    FromFile {
        path: PathBuf,
    },
}

fn default_extent() -> f64 {
    0.9
}

impl PhantomSpec {
    /// Two equal cylinders side by side along x, each of radius `radius_m`
    /// and separated by a gap of one radius.
    pub fn two_cylinders(radius_m: f64, contrast: f64) -> Self {
        let off = 1.5 * radius_m;
        PhantomSpec::Cylinders {
            cylinders: vec![
                Cylinder { center_m: [-off, 0.0], radius_m, contrast },
                Cylinder { center_m: [off, 0.0], radius_m, contrast },
            ],
        }
    }

    pub fn single_cylinder(radius_m: f64, contrast: f64) -> Self {
        PhantomSpec::Cylinders { cylinders: vec![Cylinder { center_m: [0.0, 0.0], radius_m, contrast }] }
    }

    pub fn validate(&self, grid: &DomainGrid) -> Result<()> {
        let (lo, hi) = grid.bounds();
        let c = grid.center();
        match self {
            PhantomSpec::Empty => Ok(()),
            PhantomSpec::Cylinders { cylinders } => {
                if grid.ndim() != 2 {
                    return Err(Error::Config("cylinder phantoms need a 2D grid".into()));
                }
                for cyl in cylinders {
                    if !cyl.contrast.is_finite() || !(cyl.radius_m > 0.0) {
                        return Err(Error::Config("cylinder needs finite contrast and positive radius".into()));
                    }
                    for d in 0..2 {
                        let p = c[d] + cyl.center_m[d];
                        if p - cyl.radius_m < lo[d] - 1e-12 || p + cyl.radius_m > hi[d] + 1e-12 {
                            return Err(Error::Config("cylinder extends outside the grid".into()));
                        }
                    }
                }
                Ok(())
            }
            PhantomSpec::SheppLogan { contrast, extent } => {
                if grid.ndim() != 2 {
                    return Err(Error::Config("the head phantom needs a 2D grid".into()));
                }
                if !contrast.is_finite() || !(*extent > 0.0 && *extent <= 1.0) {
                    return Err(Error::Config("need finite contrast and extent in (0, 1]".into()));
                }
                Ok(())
            }
            PhantomSpec::FromFile { path } => {
                if !path.exists() {
                    return Err(Error::Config(format!("phantom file {} not found", path.display())));
                }
                Ok(())
            }
        }
    }

    /// Potential `f` on every pixel of `grid`.
    pub fn render(&self, grid: &DomainGrid) -> Result<Vec<f64>> {
        self.validate(grid)?;
        let k2 = grid.background_wavenumber().powi(2);
        let c = grid.center();
        match self {
            PhantomSpec::Empty => Ok(vec![0.0; grid.len()]),
            PhantomSpec::Cylinders { cylinders } => Ok(render_2d(grid, |x, y| {
                cylinders
                    .iter()
                    .filter(|cy| (x - c[0] - cy.center_m[0]).hypot(y - c[1] - cy.center_m[1]) <= cy.radius_m)
                    .map(|cy| cy.contrast * k2)
                    .sum()
            })),
            PhantomSpec::SheppLogan { contrast, extent } => {
                let (lo, hi) = grid.bounds();
                let half = 0.5 * (hi[0] - lo[0]).min(hi[1] - lo[1]) * extent;
                let scale = contrast * k2 / shepp_logan_peak();
                Ok(render_2d(grid, |x, y| scale * shepp_logan((x - c[0]) / half, (y - c[1]) / half)))
            }
            PhantomSpec::FromFile { path } => {
                let table = crate::io::load_csv(path)?;
                let f = table.column("f")?;
                crate::error::check_len(grid.len(), f.len())?;
                Ok(f)
            }
        }
    }
}

fn render_2d<F>(grid: &DomainGrid, value: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let h = grid.spacing;
    let s = COVERAGE_SAMPLES;
    crate::par::map_range(grid.len(), |i| {
        let p: Point = grid.position(i);
        let mut acc = 0.0;
        for a in 0..s {
            for b in 0..s {
                let dx = ((a as f64 + 0.5) / s as f64 - 0.5) * h;
                let dy = ((b as f64 + 0.5) / s as f64 - 0.5) * h;
                acc += value(p[0] + dx, p[1] + dy);
            }
        }
        acc / (s * s) as f64
    })
}

/// Intensity, semi-axes, center and rotation (degrees) of the modified
/// (higher-contrast) head phantom.
const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Unscaled phantom at normalized coordinates in `[-1, 1]^2`.
pub fn shepp_logan(x: f64, y: f64) -> f64 {
    SHEPP_LOGAN
        .iter()
        .filter(|e| {
            let (s, c) = e[5].to_radians().sin_cos();
            let (u, v) = (x - e[3], y - e[4]);
            let (xr, yr) = (u * c + v * s, -u * s + v * c);
            (xr / e[1]).powi(2) + (yr / e[2]).powi(2) <= 1.0
        })
        .map(|e| e[0])
        .sum()
}

/// The outer shell carries the peak value of the unscaled phantom.
fn shepp_logan_peak() -> f64 {
    1.0
}

/// Potential for a contrast: `f = contrast * k_b^2`.
pub fn potential_from_contrast(contrast: f64, k_b: f64) -> f64 {
    contrast * k_b * k_b
}

/// `max |f| / k_b^2`.
pub fn contrast_of(f: &[f64], k_b: f64) -> f64 {
    f.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (k_b * k_b)
}

/// Average `factor x factor` blocks of a 2D image on `fine` down to the grid
/// it was refined from.
pub fn downsample(f: &[f64], fine: &DomainGrid, factor: usize) -> Result<Vec<f64>> {
    crate::error::check_len(fine.len(), f.len())?;
    if fine.ndim() != 2 || factor == 0 || fine.dims.iter().any(|n| n % factor != 0) {
        return Err(Error::Parameter("downsampling needs a 2D grid divisible by the factor".into()));
    }
    let (n0, n1) = (fine.dims[0] / factor, fine.dims[1] / factor);
    let mut out = vec![0.0; n0 * n1];
    for i in 0..fine.dims[0] {
        for j in 0..fine.dims[1] {
            out[(i / factor) * n1 + j / factor] += f[i * fine.dims[1] + j];
        }
    }
    let w = 1.0 / (factor * factor) as f64;
    out.iter_mut().for_each(|v| *v *= w);
    Ok(out)
}

//! Imaging-domain discretization and sensor geometry.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A point in physical space (meters). 2D geometry leaves the third
/// coordinate at zero.
pub type Point = [f64; 3];

/// Uniform Cartesian pixel grid over the imaging domain.
///
/// Pixels are stored in row-major order with the last axis contiguous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub dims: Vec<usize>,
    pub spacing: f64,
    /// Physical coordinate of the center of pixel (0, ..., 0).
    pub origin: Vec<f64>,
    pub wavelength: f64,
    pub background_permittivity: f64,
}

impl DomainGrid {
    pub fn new(
        dims: Vec<usize>,
        spacing: f64,
        origin: Vec<f64>,
        wavelength: f64,
        background_permittivity: f64,
    ) -> Result<Self> {
        let g = Self { dims, spacing, origin, wavelength, background_permittivity };
        g.validate()?;
        Ok(g)
    }

    /// Grid whose pixel centers are symmetric about the coordinate origin.
    pub fn centered(dims: Vec<usize>, spacing: f64, wavelength: f64, background_permittivity: f64) -> Result<Self> {
        let origin = dims.iter().map(|&n| -0.5 * (n as f64 - 1.0) * spacing).collect();
        Self::new(dims, spacing, origin, wavelength, background_permittivity)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dims.len() == 2 || self.dims.len() == 3) {
            return Err(Error::Config(format!("grid must be 2D or 3D, got {} axes", self.dims.len())));
        }
        if self.origin.len() != self.dims.len() {
            return Err(Error::Config("origin length differs from number of axes".into()));
        }
        if self.dims.contains(&0) {
            return Err(Error::Config("every grid dimension must be at least 1".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Config("spacing must be positive".into()));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::Config("wavelength must be positive".into()));
        }
        if !(self.background_permittivity > 0.0 && self.background_permittivity.is_finite()) {
            return Err(Error::Config("background permittivity must be positive".into()));
        }
        Ok(())
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Vacuum wavenumber `2 pi / lambda`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Background wavenumber `k sqrt(eps_b)`.
    pub fn background_wavenumber(&self) -> f64 {
        self.wavenumber() * self.background_permittivity.sqrt()
    }

    /// Area (2D) or volume (3D) of one pixel.
    pub fn pixel_measure(&self) -> f64 {
        self.spacing.powi(self.ndim() as i32)
    }

    pub fn multi_index(&self, mut linear: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for d in (0..self.ndim()).rev() {
            idx[d] = linear % self.dims[d];
            linear /= self.dims[d];
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Physical center of pixel `linear`.
    pub fn position(&self, linear: usize) -> Point {
        let idx = self.multi_index(linear);
        let mut p = [0.0; 3];
        for d in 0..self.ndim() {
            p[d] = self.origin[d] + idx[d] as f64 * self.spacing;
        }
        p
    }

    pub fn positions(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.position(i)).collect()
    }

    /// Lower and upper corners of the domain's bounding box.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for d in 0..self.ndim() {
            lo[d] = self.origin[d] - 0.5 * self.spacing;
            hi[d] = self.origin[d] + (self.dims[d] as f64 - 0.5) * self.spacing;
        }
        (lo, hi)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let (lo, hi) = self.bounds();
        (0..self.ndim()).all(|d| p[d] >= lo[d] && p[d] <= hi[d])
    }

    /// Center of the bounding box.
    pub fn center(&self) -> Point {
        let (lo, hi) = self.bounds();
        let mut c = [0.0; 3];
        for d in 0..self.ndim() {
            c[d] = 0.5 * (lo[d] + hi[d]);
        }
        c
    }

    /// Grid covering the same box with `factor` times as many pixels per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Config("refinement factor must be positive".into()));
        }
        let h = self.spacing / factor as f64;
        let origin = self.origin.iter().map(|o| o - 0.5 * self.spacing + 0.5 * h).collect();
        Self::new(
            self.dims.iter().map(|n| n * factor).collect(),
            h,
            origin,
            self.wavelength,
            self.background_permittivity,
        )
    }
}

/// Distance between two points.
pub fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Sensor locations where the scattered field is sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSet {
    pub positions: Vec<Point>,
}

impl SensorSet {
    pub fn new(positions: Vec<Point>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Config("sensor set must hold at least one position".into()));
        }
        Ok(Self { positions })
    }

    /// `count` sensors evenly spaced on a circle in the xy-plane.
    pub fn ring(center: Point, radius: f64, count: usize, start_angle: f64) -> Result<Self> {
        let positions = (0..count)
            .map(|i| {
                let a = start_angle + 2.0 * PI * i as f64 / count as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin(), center[2]]
            })
            .collect();
        Self::new(positions)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Number of sensors inside the grid's bounding box; each one is logged.
    pub fn warn_if_inside(&self, grid: &DomainGrid) -> usize {
        let mut inside = 0;
        for (i, p) in self.positions.iter().enumerate() {
            if grid.contains(p) {
                log::warn!("sensor {i} at {p:?} lies inside the imaging domain");
                inside += 1;
            }
        }
        inside
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.positions[i]).collect())
    }
}

//! Complex wave fields and the real scattering potential.

use crate::error::{check_len, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Where a field's samples live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldDomain {
    Grid,
    Sensors,
}

/// Complex samples over the pixel grid or over a sensor set.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub values: Vec<Complex64>,
    pub domain: FieldDomain,
}

impl ComplexField {
    pub fn grid(values: Vec<Complex64>) -> Self {
        Self { values, domain: FieldDomain::Grid }
    }

    pub fn sensors(values: Vec<Complex64>) -> Self {
        Self { values, domain: FieldDomain::Sensors }
    }

    pub fn zeros(len: usize, domain: FieldDomain) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); len], domain }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.values)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian inner product `<self, other> = sum conj(self_i) other_i`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        check_len(self.len(), other.len())?;
        Ok(inner(&self.values, &other.values))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scaled(&self, s: Complex64) -> ComplexField {
        ComplexField { values: self.values.iter().map(|v| v * s).collect(), domain: self.domain }
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        check_len(self.len(), other.len())?;
        Ok(ComplexField {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            domain: self.domain,
        })
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        check_len(self.len(), other.len())?;
        Ok(ComplexField {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            domain: self.domain,
        })
    }
}

/// The real image `f = k^2 (eps - eps_b)` sampled at pixel centers, in 1/m^2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringPotential {
    pub values: Vec<f64>,
}

impl ScatteringPotential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scattering potential".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max |f| / k_b^2`.
    pub fn contrast(&self, background_wavenumber: f64) -> f64 {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        peak / (background_wavenumber * background_wavenumber)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect() }
    }
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Component-wise product of a real image and a complex field.
pub fn real_times(f: &[f64], u: &[Complex64]) -> Vec<Complex64> {
    f.iter().zip(u).map(|(a, b)| b * *a).collect()
}

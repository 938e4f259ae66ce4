//! Evaluation quantities: normalized errors, data fit and SNR.

use crate::error::{check_len, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    NormalizedError,
    NormalizedDataFit,
    NormalizedReconError,
    SnrDb,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: MetricName,
    /// `+inf` is serialized as `null`.
    pub value: Option<f64>,
}

impl MetricValue {
    pub fn new(name: MetricName, value: f64) -> Self {
        MetricValue { name, value: value.is_finite().then_some(value) }
    }
}

/// `||a - b||^2 / ||b||^2` over complex vectors.
pub fn normalized_error(estimate: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    check_len(reference.len(), estimate.len())?;
    let den: f64 = reference.iter().map(|v| v.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::UndefinedReference);
    }
    let num: f64 = estimate.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(num / den)
}

/// `||z - y||^2 / ||y||^2`, accumulated over per-transmitter blocks.
pub fn normalized_data_fit(z: &[Vec<Complex64>], y: &[Vec<Complex64>]) -> Result<f64> {
    check_len(y.len(), z.len())?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (zt, yt) in z.iter().zip(y) {
        check_len(yt.len(), zt.len())?;
        num += zt.iter().zip(yt).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        den += yt.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    if den == 0.0 {
        return Err(Error::UndefinedReference);
    }
    Ok(num / den)
}

/// `||f_hat - f||^2 / ||f||^2`.
pub fn normalized_recon_error(f_hat: &[f64], f: &[f64]) -> Result<f64> {
    check_len(f.len(), f_hat.len())?;
    let den: f64 = f.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::UndefinedReference);
    }
    let num: f64 = f_hat.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(num / den)
}

/// `10 log10(||f_ref||^2 / ||f_hat - f_ref||^2)`; exact agreement gives
/// `+inf`.
pub fn snr_db(f_hat: &[f64], f_ref: &[f64]) -> Result<f64> {
    let ratio = normalized_recon_error(f_hat, f_ref)?;
    if ratio == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * ratio.log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, -0.5 * x)).collect()
    }

    #[test]
    fn normalized_error_cases() {
        let u = c(&[1.0, -2.0, 3.0]);
        assert_eq!(normalized_error(&u, &u).unwrap(), 0.0);
        assert_eq!(normalized_error(&c(&[0.0; 3]), &u).unwrap(), 1.0);
        let twice: Vec<_> = u.iter().map(|v| v * 2.0).collect();
        assert_eq!(normalized_error(&twice, &u).unwrap(), 1.0);
        assert!(matches!(normalized_error(&u, &c(&[0.0; 3])), Err(Error::UndefinedReference)));
    }

    #[test]
    fn normalized_error_is_scale_invariant() {
        let a = c(&[0.3, 1.0, -2.0]);
        let b = c(&[0.5, 1.5, -1.0]);
        let s = Complex64::new(-3.0, 2.0);
        let sa: Vec<_> = a.iter().map(|v| v * s).collect();
        let sb: Vec<_> = b.iter().map(|v| v * s).collect();
        let e1 = normalized_error(&a, &b).unwrap();
        let e2 = normalized_error(&sa, &sb).unwrap();
        assert!((e1 - e2).abs() <= 1e-15 * e1);
    }

    #[test]
    fn data_fit_and_recon_error_cases() {
        let y = vec![c(&[1.0, 2.0]), c(&[-1.0])];
        assert_eq!(normalized_data_fit(&y, &y).unwrap(), 0.0);
        let zero = vec![c(&[0.0, 0.0]), c(&[0.0])];
        assert_eq!(normalized_data_fit(&zero, &y).unwrap(), 1.0);
        let f = [0.0, 1.0, 4.0];
        assert_eq!(normalized_recon_error(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn snr_cases() {
        let f = [3.0, 4.0];
        assert_eq!(snr_db(&[0.0, 0.0], &f).unwrap(), 0.0);
        assert_eq!(snr_db(&f, &f).unwrap(), f64::INFINITY);
        // ||f_hat - f|| = ||f|| / 10.
        let close = [3.3, 4.4];
        assert!((snr_db(&close, &f).unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(MetricValue::new(MetricName::SnrDb, f64::INFINITY).value, None);
    }

    #[test]
    fn snr_decreases_with_noise() {
        let f: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let noise: Vec<f64> = (0..50).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.05, 0.1, 0.5, 1.0] {
            let noisy: Vec<f64> = f.iter().zip(&noise).map(|(a, n)| a + amp * n).collect();
            let s = snr_db(&noisy, &f).unwrap();
            assert!(s < last);
            last = s;
        }
    }
}

//! Linearized baselines: the first Born model `z = H (u_in . f)` and the
//! Rytov data transform that feeds the same linear model.

use crate::error::{check_len, Error, Result};
use crate::field::norm_sqr;
use crate::greens::SensorOperator;
use num_complex::Complex64;
use std::f64::consts::PI;

pub fn born_predict(f: &[f64], u_in: &[Complex64], h: &SensorOperator, rows: &[usize]) -> Result<Vec<Complex64>> {
    check_len(u_in.len(), f.len())?;
    h.apply_rows(&crate::field::real_times(f, u_in), rows)
}

/// Value `1/2 ||y - z_B||^2` and gradient `Re{conj(u_in) . H^H (z_B - y)}`.
pub fn born_gradient(
    f: &[f64],
    y: &[Complex64],
    u_in: &[Complex64],
    h: &SensorOperator,
    rows: &[usize],
) -> Result<(f64, Vec<f64>)> {
    check_len(rows.len(), y.len())?;
    let z = born_predict(f, u_in, h, rows)?;
    let resid: Vec<Complex64> = z.iter().zip(y).map(|(a, b)| a - b).collect();
    let back = h.apply_adjoint_rows(&resid, rows)?;
    let grad = u_in.iter().zip(&back).map(|(u, b)| (u.conj() * b).re).collect();
    Ok((0.5 * norm_sqr(&resid), grad))
}

#[derive(Clone, Debug)]
pub struct RytovData {
    pub values: Vec<Complex64>,
    /// Receiver positions where the raw phase jumped by more than pi and
    /// unwrapping had to pick a branch.
    pub unwrap_flags: Vec<usize>,
}

/// `u_in . log(u_total / u_in)`, with the phase of the ratio unwrapped along
/// the receiver order.
pub fn rytov_transform(u_total: &[Complex64], u_in: &[Complex64]) -> Result<RytovData> {
    check_len(u_in.len(), u_total.len())?;
    if let Some(i) = u_in.iter().position(|v| v.norm() == 0.0) {
        return Err(Error::ZeroIncident { sensor: i });
    }
    let ratios: Vec<Complex64> = u_total.iter().zip(u_in).map(|(a, b)| a / b).collect();
    if let Some(i) = ratios.iter().position(|v| v.norm() == 0.0 || !v.is_finite()) {
        return Err(Error::NonFinite(format!("total-to-incident ratio at sensor {i}")));
    }
    let mut flags = Vec::new();
    let mut values = Vec::with_capacity(ratios.len());
    let mut prev_raw = 0.0;
    let mut offset = 0.0;
    for (i, (r, u)) in ratios.iter().zip(u_in).enumerate() {
        let raw = r.arg();
        if i > 0 {
            let jump = raw - prev_raw;
            if jump.abs() > PI {
                flags.push(i);
                offset -= 2.0 * PI * (jump / (2.0 * PI)).round();
            }
        }
        prev_raw = raw;
        values.push(u * Complex64::new(r.norm().ln(), raw + offset));
    }
    if !flags.is_empty() {
        log::warn!("rytov transform unwrapped {} phase jumps", flags.len());
    }
    Ok(RytovData { values, unwrap_flags: flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;

    #[test]
    fn born_prediction_is_linear_and_vanishes_at_zero() {
        let fx = fixture(8, 5);
        let mut rng = rng(1);
        let u_in = plane_wave(&fx.grid);
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        let zero = vec![0.0; f.len()];
        assert!(born_predict(&zero, &u_in, &fx.h, &fx.rows).unwrap().iter().all(|v| v.norm() == 0.0));
        let a = born_predict(&f, &u_in, &fx.h, &fx.rows).unwrap();
        let f2: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        let b = born_predict(&f2, &u_in, &fx.h, &fx.rows).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x * 2.0 - y).norm() <= 1e-15 * y.norm()));
    }

    #[test]
    fn born_gradient_matches_finite_differences() {
        let fx = fixture(8, 5);
        let mut rng = rng(2);
        let u_in = plane_wave(&fx.grid);
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        let y = random_field(&mut rng, fx.rows.len());
        let (_, grad) = born_gradient(&f, &y, &u_in, &fx.h, &fx.rows).unwrap();
        let eps = 1e-3 * f.iter().cloned().fold(0.0, f64::max);
        let fd: Vec<f64> = (0..f.len())
            .map(|i| {
                let mut p = f.clone();
                let mut m = f.clone();
                p[i] += eps;
                m[i] -= eps;
                let vp = born_gradient(&p, &y, &u_in, &fx.h, &fx.rows).unwrap().0;
                let vm = born_gradient(&m, &y, &u_in, &fx.h, &fx.rows).unwrap().0;
                (vp - vm) / (2.0 * eps)
            })
            .collect();
        // D is quadratic in f, so central differences are exact up to rounding.
        assert!(rel_err(&grad, &fd) <= 1e-8);
    }

    #[test]
    fn rytov_of_unperturbed_field_is_zero() {
        let mut rng = rng(3);
        let u = random_field(&mut rng, 10);
        let r = rytov_transform(&u, &u).unwrap();
        assert!(r.values.iter().all(|v| v.norm() < 1e-15));
        assert!(r.unwrap_flags.is_empty());
    }

    #[test]
    fn rytov_small_phase_is_first_order() {
        let mut rng = rng(4);
        let u = random_field(&mut rng, 10);
        let phi = 1e-3;
        let total: Vec<_> = u.iter().map(|v| v * Complex64::from_polar(1.0, phi)).collect();
        let r = rytov_transform(&total, &u).unwrap();
        for (v, ui) in r.values.iter().zip(&u) {
            let expect = Complex64::new(0.0, phi) * ui;
            assert!((v - expect).norm() <= 1e-12 * expect.norm());
        }
    }

    #[test]
    fn rytov_unwraps_a_phase_ramp() {
        let n = 40;
        let u = vec![Complex64::new(1.0, 0.0); n];
        let total: Vec<_> = (0..n).map(|i| Complex64::from_polar(1.0, 0.5 * i as f64)).collect();
        let r = rytov_transform(&total, &u).unwrap();
        for (i, v) in r.values.iter().enumerate() {
            assert!((v.im - 0.5 * i as f64).abs() < 1e-12);
        }
        assert!(!r.unwrap_flags.is_empty());
    }

    #[test]
    fn rytov_rejects_zero_incident() {
        let u = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(matches!(rytov_transform(&u, &u), Err(Error::ZeroIncident { sensor: 1 })));
    }
}

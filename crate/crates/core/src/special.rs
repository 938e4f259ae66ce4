//! Cylindrical and spherical Bessel functions, Hankel functions and Legendre
//! polynomials for real, positive arguments.
//!
//! Orders 0 and 1 of J and Y use the ascending power series below
//! [`SERIES_SWITCH`] and the Hankel asymptotic expansion above it. Arrays of
//! integer orders use Miller's backward recurrence for J and forward
//! recurrence for Y, each in its stable direction.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Argument above which orders 0 and 1 switch from the power series to the
/// asymptotic expansion. The smallest asymptotic term scales like `exp(-2x)`,
/// so the switch must sit high enough for that to drop below 1e-10.
pub const SERIES_SWITCH: f64 = 12.0;

fn series_j(order: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, prefactor) = match order {
        0 => (1.0, 1.0),
        _ => (1.0, 0.5 * x),
    };
    let mut sum = term;
    for k in 1..400 {
        let kf = k as f64;
        term *= -q / (kf * (kf + order as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && kf > 0.5 * x {
            break;
        }
    }
    prefactor * sum
}

fn series_y0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..400 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        let contrib = term * harmonic;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-300) && kf > 0.5 * x {
            break;
        }
    }
    FRAC_2_PI * ((0.5 * x).ln() + EULER_GAMMA) * series_j(0, x) - FRAC_2_PI * sum
}

fn series_y1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let half = 0.5 * x;
    // k = 0 term: (H_0 + H_1) (x/2) / (0! 1!) = x/2.
    let mut term = half;
    let mut h_k = 0.0;
    let mut h_k1 = 1.0;
    let mut sum = term * (h_k + h_k1);
    for k in 1..400 {
        let kf = k as f64;
        term *= -q / (kf * (kf + 1.0));
        h_k += 1.0 / kf;
        h_k1 += 1.0 / (kf + 1.0);
        let contrib = term * (h_k + h_k1);
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs().max(1e-300) && kf > 0.5 * x {
            break;
        }
    }
    FRAC_2_PI * ((0.5 * x).ln() + EULER_GAMMA) * series_j(1, x) - FRAC_2_PI / x - sum / PI
}

/// Hankel asymptotic expansion of H_order^(1)(x) for large x.
fn asymptotic_hankel(order: u32, x: f64) -> Complex64 {
    let mu = 4.0 * (order * order) as f64;
    let mut a_k = 1.0;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut i_pow = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    let max_k = (2.0 * x) as usize + 1;
    for k in 1..=max_k {
        let odd = (2 * k - 1) as f64;
        a_k *= (mu - odd * odd) / (8.0 * k as f64 * x);
        i_pow *= Complex64::i();
        let mag = a_k.abs();
        if mag > prev {
            break;
        }
        sum += i_pow * a_k;
        prev = mag;
        if mag < 1e-17 {
            break;
        }
    }
    let omega = x - order as f64 * FRAC_PI_2 - FRAC_PI_4;
    (FRAC_2_PI / x).sqrt() * Complex64::from_polar(1.0, omega) * sum
}

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_SWITCH {
        series_j(0, ax)
    } else {
        asymptotic_hankel(0, ax).re
    }
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_SWITCH { series_j(1, ax) } else { asymptotic_hankel(1, ax).re };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Bessel function of the second kind, order 0. Requires `x > 0`.
pub fn bessel_y0(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        series_y0(x)
    } else {
        asymptotic_hankel(0, x).im
    }
}

/// Bessel function of the second kind, order 1. Requires `x > 0`.
pub fn bessel_y1(x: f64) -> f64 {
    if x < SERIES_SWITCH {
        series_y1(x)
    } else {
        asymptotic_hankel(1, x).im
    }
}

/// H_0^(1)(x) = J_0(x) + j Y_0(x).
pub fn hankel1_0(x: f64) -> Complex64 {
    if x < SERIES_SWITCH {
        Complex64::new(series_j(0, x), series_y0(x))
    } else {
        asymptotic_hankel(0, x)
    }
}

/// H_1^(1)(x) = J_1(x) + j Y_1(x).
pub fn hankel1_1(x: f64) -> Complex64 {
    if x < SERIES_SWITCH {
        Complex64::new(series_j(1, x), series_y1(x))
    } else {
        asymptotic_hankel(1, x)
    }
}

/// J_0(x) ... J_max(x) by Miller's backward recurrence, normalized with
/// J_0 + 2 sum J_2k = 1. Requires `x >= 0`.
pub fn bessel_j_orders(max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = (max as f64).max(x);
    let mut start = (top + 20.0 + (160.0 * top).sqrt()) as usize;
    start += start % 2;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-30;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        vals[k - 1] = prev;
        if prev.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            norm *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * vals[k - 1];
        }
    }
    norm += vals[0];
    for (o, v) in out.iter_mut().zip(vals.iter()) {
        *o = v / norm;
    }
    out
}

/// Y_0(x) ... Y_max(x) by forward recurrence. Requires `x > 0`.
pub fn bessel_y_orders(max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(bessel_y0(x));
    if max >= 1 {
        out.push(bessel_y1(x));
    }
    for k in 1..max {
        let next = 2.0 * k as f64 / x * out[k] - out[k - 1];
        out.push(next);
    }
    out
}

/// J_m(x) for signed integer order, using J_{-m} = (-1)^m J_m.
pub fn bessel_j_int(m: i64, x: f64) -> f64 {
    let n = m.unsigned_abs() as usize;
    let v = bessel_j_orders(n, x)[n];
    if m < 0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Y_m(x) for signed integer order, using Y_{-m} = (-1)^m Y_m.
pub fn bessel_y_int(m: i64, x: f64) -> f64 {
    let n = m.unsigned_abs() as usize;
    let v = bessel_y_orders(n, x)[n];
    if m < 0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Spherical Bessel j_0 ... j_max by downward recurrence, normalized against
/// the closed form of j_0 or j_1, whichever is larger in magnitude.
pub fn spherical_j_orders(max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    if max == 0 {
        out[0] = j0;
        return out;
    }
    let top = (max as f64).max(x);
    let start = (top + 20.0 + (160.0 * top).sqrt()) as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-30;
    for l in (1..=start).rev() {
        let prev = (2 * l + 1) as f64 / x * vals[l] - vals[l + 1];
        vals[l - 1] = prev;
        if prev.abs() > 1e250 {
            for v in vals[l - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let scale = if j0.abs() >= j1.abs() { j0 / vals[0] } else { j1 / vals[1] };
    for (o, v) in out.iter_mut().zip(vals.iter()) {
        *o = v * scale;
    }
    out
}

/// Spherical Bessel n_0 ... n_max (second kind) by forward recurrence.
/// Requires `x > 0`.
pub fn spherical_y_orders(max: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(max + 1);
    out.push(-c / x);
    if max >= 1 {
        out.push(-c / (x * x) - s / x);
    }
    for l in 1..max {
        let next = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        out.push(next);
    }
    out
}

/// Legendre polynomials P_0(x) ... P_max(x) by the three-term recurrence.
pub fn legendre_orders(max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(1.0);
    if max >= 1 {
        out.push(x);
    }
    for l in 1..max {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * x * out[l] - lf * out[l - 1]) / (lf + 1.0);
        out.push(next);
    }
    out
}

/// Legendre polynomial P_l(x).
pub fn legendre(l: usize, x: f64) -> f64 {
    legendre_orders(l, x)[l]
}

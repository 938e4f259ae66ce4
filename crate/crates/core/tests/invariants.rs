//! Property-based checks of structural invariants.

use msinv::greens::{apply_a, apply_ah, build_domain_operator, GreensOperator};
use msinv::grid::{DomainGrid, SensorSet};
use msinv::io::CsvTable;
use msinv::measurement::{point_sources_on_ring, MeasurementSet};
use msinv::metrics::{normalized_error, snr_db};
use msinv::special::{bessel_j_orders, bessel_y_orders};
use msinv::tv::{grad_adjoint, grad_op, prox_tv, tv_value, BoxConstraint, TvConfig, TvVariant};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn domain_operator_adjoint(x in complex_vec(64), y in complex_vec(64), f in prop::collection::vec(0.0..50.0f64, 64)) {
        let grid = DomainGrid::centered(vec![8, 8], 0.005, 0.0749, 1.0).unwrap();
        let g = build_domain_operator(&grid).unwrap();
        let lhs = inner(&g.apply(&x).unwrap(), &y);
        let rhs = inner(&x, &g.apply_adjoint(&y).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1e-300));
        let lhs = inner(&apply_a(&f, &x, &g).unwrap(), &y);
        let rhs = inner(&x, &apply_ah(&f, &y, &g).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1e-300));
    }

    #[test]
    fn gradient_operator_adjoint(f in prop::collection::vec(-1.0..1.0f64, 30), g in prop::collection::vec(-1.0..1.0f64, 60)) {
        let dims = [5, 6];
        let lhs: f64 = grad_op(&f, &dims).unwrap().iter().zip(&g).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.iter().zip(grad_adjoint(&g, &dims).unwrap()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn tv_ignores_constant_shifts(f in prop::collection::vec(-1.0..1.0f64, 25), c in -5.0..5.0f64) {
        let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
        for variant in [TvVariant::Isotropic, TvVariant::Anisotropic] {
            let a = tv_value(&f, &[5, 5], variant).unwrap();
            let b = tv_value(&shifted, &[5, 5], variant).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn prox_is_nonexpansive_and_feasible(
        a in prop::collection::vec(-1.0..1.0f64, 25),
        b in prop::collection::vec(-1.0..1.0f64, 25),
        tau in 0.01..1.0f64,
    ) {
        let cfg = TvConfig { max_iters: 2000, delta_in: 0.0, ..TvConfig::default() };
        let bounds = BoxConstraint::nonnegative();
        let pa = prox_tv(&a, tau, &[5, 5], &bounds, &cfg, None).unwrap().f;
        let pb = prox_tv(&b, tau, &[5, 5], &bounds, &cfg, None).unwrap().f;
        let d_in: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let d_out: f64 = pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d_out <= d_in * (1.0 + 1e-9) + 1e-12);
        prop_assert!(pa.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn normalized_error_scale_invariance(a in complex_vec(12), b in complex_vec(12), re in 0.1..5.0f64, im in -5.0..5.0f64) {
        prop_assume!(b.iter().map(|v| v.norm_sqr()).sum::<f64>() > 1e-6);
        let s = Complex64::new(re, im);
        let sa: Vec<_> = a.iter().map(|v| v * s).collect();
        let sb: Vec<_> = b.iter().map(|v| v * s).collect();
        let e1 = normalized_error(&a, &b).unwrap();
        let e2 = normalized_error(&sa, &sb).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.max(1e-12));
    }

    #[test]
    fn snr_falls_as_noise_grows(f in prop::collection::vec(0.5..2.0f64, 16), noise in prop::collection::vec(-1.0..1.0f64, 16)) {
        prop_assume!(noise.iter().any(|v| v.abs() > 1e-3));
        let at = |amp: f64| {
            let g: Vec<f64> = f.iter().zip(&noise).map(|(a, n)| a + amp * n).collect();
            snr_db(&g, &f).unwrap()
        };
        prop_assert!(at(0.01) > at(0.1));
        prop_assert!(at(0.1) > at(1.0));
    }

    #[test]
    fn bessel_wronskian(x in 0.05..90.0f64) {
        let j = bessel_j_orders(6, x);
        let y = bessel_y_orders(6, x);
        for m in 0..6 {
            let w = j[m + 1] * y[m] - j[m] * y[m + 1];
            let expect = 2.0 / (std::f64::consts::PI * x);
            prop_assert!((w - expect).abs() <= 1e-10 * expect, "m {} x {}: {} vs {}", m, x, w, expect);
        }
    }

    #[test]
    fn decimation_is_nested(len in 1usize..300, p in 0u32..7) {
        let receivers = SensorSet::ring([0.0; 3], 1.0, len, 0.0).unwrap();
        let m = MeasurementSet {
            frequency_hz: 3e9,
            background_permittivity: 1.0,
            transmitters: point_sources_on_ring([0.0; 3], 2.0, 1, 0.0),
            receivers,
            active: vec![(0..len).collect()],
            y: vec![vec![Complex64::new(1.0, 0.0); len]],
        };
        let coarse_factor = 1usize << (p + 1);
        let fine = m.subsample(coarse_factor / 2).unwrap();
        let coarse = m.subsample(coarse_factor).unwrap();
        prop_assert!(coarse.active[0].iter().all(|r| fine.active[0].contains(r)));
        // Positions 1, 1 + f, 1 + 2f, ... below len.
        let expected = if len > 1 { (len - 2) / coarse_factor + 1 } else { 0 };
        prop_assert_eq!(coarse.active[0].len(), expected);
    }

    #[test]
    fn csv_round_trip_any_float(vals in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..20)) {
        let mut t = CsvTable::new(&["v"]);
        for v in &vals {
            t.push(vec![*v]).unwrap();
        }
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = CsvTable::read(&buf[..]).unwrap();
        for (a, b) in back.column("v").unwrap().iter().zip(&vals) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

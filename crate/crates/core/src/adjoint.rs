//! Gradient of the data term `D(f) = 1/2 ||y - z(f)||^2` by running the
//! forward recurrence backwards.
//!
//! The backward pass keeps two vectors: `q`, which multiplies the Jacobian of
//! the current iterate, and `r`, the accumulated gradient. The momentum skip
//! term is carried by remembering `S^{k+1} q^{k+1}` from the previous step,
//! so each step costs one forward and one adjoint application of `G`. The
//! step sizes are treated as constants, which is exact for a fixed step.

use crate::error::{check_len, Error, Result};
use crate::field::norm_sqr;
use crate::forward::{forward_solve, ForwardConfig, ForwardTrace};
use crate::greens::{apply_a, apply_ah, DomainOperator, GreensOperator, SensorOperator};
use num_complex::Complex64;

/// `1/2 ||y - z||^2`.
pub fn data_fidelity(y: &[Complex64], z: &[Complex64]) -> Result<f64> {
    check_len(y.len(), z.len())?;
    Ok(0.5 * y.iter().zip(z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>())
}

/// `S^k v = v - gamma_k A^H A v`.
pub fn apply_sk(f: &[f64], gamma: f64, v: &[Complex64], g: &DomainOperator) -> Result<Vec<Complex64>> {
    let aha = apply_ah(f, &apply_a(f, v, g)?, g)?;
    Ok(v.iter().zip(aha).map(|(a, b)| a - b * gamma).collect())
}

/// `T^k v = conj(G^H (A s^k - u_in)) . v + conj(s^k) . G^H (A v)`.
pub fn apply_tk(
    f: &[f64],
    s_k: &[Complex64],
    v: &[Complex64],
    u_in: &[Complex64],
    g: &DomainOperator,
) -> Result<Vec<Complex64>> {
    check_len(s_k.len(), u_in.len())?;
    let resid: Vec<Complex64> = apply_a(f, s_k, g)?.iter().zip(u_in).map(|(a, b)| a - b).collect();
    let gh_resid = g.apply_adjoint(&resid)?;
    let gh_av = g.apply_adjoint(&apply_a(f, v, g)?)?;
    Ok((0..v.len()).map(|i| gh_resid[i].conj() * v[i] + s_k[i].conj() * gh_av[i]).collect())
}

/// Backward pass for the residual `z - y`; returns the complex `r^0`, whose
/// real part is the gradient.
pub fn backpropagate(
    f: &[f64],
    residual: &[Complex64],
    g: &DomainOperator,
    h: &SensorOperator,
    rows: &[usize],
    trace: &ForwardTrace,
) -> Result<Vec<Complex64>> {
    let n = g.input_len();
    check_len(n, f.len())?;
    check_len(rows.len(), residual.len())?;
    let k_eff = trace.k_effective;
    if trace.s_history.len() != k_eff
        || trace.gamma_history.len() != k_eff
        || trace.mu_history.len() != k_eff
        || trace.residual_adjoint.len() != k_eff
    {
        return Err(Error::Dimension { expected: k_eff, got: trace.s_history.len() });
    }
    let w = h.apply_adjoint_rows(residual, rows)?;
    let mut q: Vec<Complex64> = w.iter().zip(f).map(|(a, b)| a * *b).collect();
    let mut r: Vec<Complex64> = w.iter().zip(&trace.u_hat).map(|(a, u)| u.conj() * a).collect();
    let mut sigma_next = vec![Complex64::new(0.0, 0.0); n];
    let mut mu_next = 0.0;
    for k in (0..k_eff).rev() {
        let gamma = trace.gamma_history[k];
        let mu = trace.mu_history[k];
        let s = &trace.s_history[k];
        let gh_resid = &trace.residual_adjoint[k];
        let aq = apply_a(f, &q, g)?;
        let gh_aq = g.apply_adjoint(&aq)?;
        let mut sigma = Vec::with_capacity(n);
        for i in 0..n {
            r[i] += gamma * (gh_resid[i].conj() * q[i] + s[i].conj() * gh_aq[i]);
            sigma.push(q[i] - gamma * (aq[i] - gh_aq[i] * f[i]));
        }
        for i in 0..n {
            q[i] = sigma[i] * (1.0 - mu) + sigma_next[i] * mu_next;
        }
        sigma_next = sigma;
        mu_next = mu;
    }
    Ok(r)
}

/// Value and gradient of the data term for one illumination.
#[derive(Clone, Debug)]
pub struct DataGradient {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub z: Vec<Complex64>,
    pub k_effective: usize,
}

/// Forward solve followed by the backward pass.
pub fn gradient_data_fidelity(
    f: &[f64],
    y: &[Complex64],
    u_in: &[Complex64],
    g: &DomainOperator,
    h: &SensorOperator,
    rows: &[usize],
    cfg: &ForwardConfig,
) -> Result<DataGradient> {
    check_len(rows.len(), y.len())?;
    let trace = forward_solve(f, u_in, g, h, rows, cfg)?;
    gradient_from_trace(f, y, g, h, rows, &trace)
}

/// Backward pass for a trace computed elsewhere.
pub fn gradient_from_trace(
    f: &[f64],
    y: &[Complex64],
    g: &DomainOperator,
    h: &SensorOperator,
    rows: &[usize],
    trace: &ForwardTrace,
) -> Result<DataGradient> {
    let residual: Vec<Complex64> = trace.z.iter().zip(y).map(|(a, b)| a - b).collect();
    let r = backpropagate(f, &residual, g, h, rows, trace)?;
    let gradient: Vec<f64> = r.iter().map(|c| c.re).collect();
    if gradient.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("data-fidelity gradient".into()));
    }
    Ok(DataGradient { value: 0.5 * norm_sqr(&residual), gradient, z: trace.z.clone(), k_effective: trace.k_effective })
}

/// Central differences of the data term with step `eps` per pixel; the
/// reference the backward pass is checked against.
#[allow(clippy::too_many_arguments)]
pub fn central_difference_gradient(
    f: &[f64],
    y: &[Complex64],
    u_in: &[Complex64],
    g: &DomainOperator,
    h: &SensorOperator,
    rows: &[usize],
    cfg: &ForwardConfig,
    eps: f64,
) -> Result<Vec<f64>> {
    let value = |v: &[f64]| -> Result<f64> { data_fidelity(y, &forward_solve(v, u_in, g, h, rows, cfg)?.z) };
    crate::par::map_range(f.len(), |i| {
        let (mut p, mut m) = (f.to_vec(), f.to_vec());
        p[i] += eps;
        m[i] -= eps;
        Ok((value(&p)? - value(&m)?) / (2.0 * eps))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{estimate_lipschitz, StepMode};
    use crate::testutil::*;

    fn fixed_cfg(f: &[f64], g: &DomainOperator, k: usize) -> ForwardConfig {
        let l = estimate_lipschitz(f, g, 20, 1e-3, 0).unwrap();
        ForwardConfig { max_iters: k, step_mode: StepMode::Fixed(0.9 / l), ..Default::default() }
    }

    fn value(f: &[f64], y: &[Complex64], u_in: &[Complex64], fx: &Fixture, cfg: &ForwardConfig) -> f64 {
        let tr = forward_solve(f, u_in, &fx.g, &fx.h, &fx.rows, cfg).unwrap();
        data_fidelity(y, &tr.z).unwrap()
    }

    fn finite_difference(
        f: &[f64],
        y: &[Complex64],
        u_in: &[Complex64],
        fx: &Fixture,
        cfg: &ForwardConfig,
    ) -> Vec<f64> {
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let eps = 1e-5 * scale;
        (0..f.len())
            .map(|i| {
                let mut p = f.to_vec();
                let mut m = f.to_vec();
                p[i] += eps;
                m[i] -= eps;
                (value(&p, y, u_in, fx, cfg) - value(&m, y, u_in, fx, cfg)) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn data_fidelity_trivial_cases() {
        let mut rng = rng(1);
        let y = random_field(&mut rng, 7);
        assert_eq!(data_fidelity(&y, &y).unwrap(), 0.0);
        let zero = vec![Complex64::new(0.0, 0.0); 7];
        assert!((data_fidelity(&y, &zero).unwrap() - 0.5 * norm_sqr(&y)).abs() < 1e-15);
        assert!(data_fidelity(&y, &zero[..3]).is_err());
    }

    #[test]
    fn sk_and_tk_match_dense_oracle() {
        let fx = fixture(8, 6);
        let mut rng = rng(2);
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        let v = random_field(&mut rng, fx.grid.len());
        let s = random_field(&mut rng, fx.grid.len());
        let u_in = plane_wave(&fx.grid);
        let gm = dense_g(&fx.grid);
        let am = dense_a(&gm, &f);
        let gamma = 0.37;

        let aha = matvec_h(&am, &matvec(&am, &v));
        let expect: Vec<_> = v.iter().zip(&aha).map(|(a, b)| a - b * gamma).collect();
        assert!(rel_err_c(&apply_sk(&f, gamma, &v, &fx.g).unwrap(), &expect) < 1e-12);

        let resid: Vec<_> = matvec(&am, &s).iter().zip(&u_in).map(|(a, b)| a - b).collect();
        let ghr = matvec_h(&gm, &resid);
        let ghav = matvec_h(&gm, &matvec(&am, &v));
        let expect: Vec<_> = (0..v.len()).map(|i| ghr[i].conj() * v[i] + s[i].conj() * ghav[i]).collect();
        assert!(rel_err_c(&apply_tk(&f, &s, &v, &u_in, &fx.g).unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn sk_and_tk_trivial_cases() {
        let fx = fixture(6, 4);
        let mut rng = rng(3);
        let v = random_field(&mut rng, fx.grid.len());
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        assert_eq!(apply_sk(&f, 0.0, &v, &fx.g).unwrap(), v);
        let zero_f = vec![0.0; fx.grid.len()];
        let s = apply_sk(&zero_f, 0.25, &v, &fx.g).unwrap();
        assert!(rel_err_c(&s, &v.iter().map(|x| x * 0.75).collect::<Vec<_>>()) < 1e-15);

        let u_in = plane_wave(&fx.grid);
        let t = apply_tk(&zero_f, &u_in, &v, &u_in, &fx.g).unwrap();
        let ghv = fx.g.apply_adjoint(&v).unwrap();
        let expect: Vec<_> = u_in.iter().zip(&ghv).map(|(u, w)| u.conj() * w).collect();
        assert!(rel_err_c(&t, &expect) < 1e-15);
        let zero_v = vec![Complex64::new(0.0, 0.0); v.len()];
        assert!(apply_tk(&f, &u_in, &zero_v, &u_in, &fx.g).unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn matching_data_gives_zero_gradient() {
        let fx = fixture(8, 6);
        let mut rng = rng(4);
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        let u_in = plane_wave(&fx.grid);
        let cfg = ForwardConfig { max_iters: 10, ..Default::default() };
        let y = forward_solve(&f, &u_in, &fx.g, &fx.h, &fx.rows, &cfg).unwrap().z;
        let d = gradient_data_fidelity(&f, &y, &u_in, &fx.g, &fx.h, &fx.rows, &cfg).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.gradient.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_potential_gradient_is_born_backprojection() {
        let fx = fixture(8, 6);
        let mut rng = rng(5);
        let y = random_field(&mut rng, fx.rows.len());
        let u_in = plane_wave(&fx.grid);
        let f = vec![0.0; fx.grid.len()];
        let cfg = ForwardConfig { max_iters: 5, ..Default::default() };
        let d = gradient_data_fidelity(&f, &y, &u_in, &fx.g, &fx.h, &fx.rows, &cfg).unwrap();
        let hy = fx.h.apply_adjoint(&y).unwrap();
        let expect: Vec<f64> = u_in.iter().zip(&hy).map(|(u, w)| -(u.conj() * w).re).collect();
        assert!(rel_err(&d.gradient, &expect) < 1e-14);
    }

    #[test]
    fn fixed_step_gradient_matches_finite_differences() {
        let fx = fixture(8, 6);
        let mut rng = rng(6);
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        let y = random_field(&mut rng, fx.rows.len());
        let u_in = plane_wave(&fx.grid);
        let cfg = fixed_cfg(&f, &fx.g, 5);
        let d = gradient_data_fidelity(&f, &y, &u_in, &fx.g, &fx.h, &fx.rows, &cfg).unwrap();
        let fd = finite_difference(&f, &y, &u_in, &fx, &cfg);
        let err = rel_err(&d.gradient, &fd);
        assert!(err <= 1e-6, "relative error {err:e}");
    }

    /// Explicit three-vector recursion with a separate skip vector `p`.
    fn backprop_p_form(
        f: &[f64],
        residual: &[Complex64],
        u_in: &[Complex64],
        fx: &Fixture,
        tr: &ForwardTrace,
    ) -> Vec<Complex64> {
        let w = fx.h.apply_adjoint_rows(residual, &fx.rows).unwrap();
        let mut q: Vec<Complex64> = w.iter().zip(f).map(|(a, b)| a * *b).collect();
        let mut r: Vec<Complex64> = w.iter().zip(&tr.u_hat).map(|(a, u)| u.conj() * a).collect();
        let mut p = vec![Complex64::new(0.0, 0.0); f.len()];
        for k in (0..tr.k_effective).rev() {
            let (gamma, mu) = (tr.gamma_history[k], tr.mu_history[k]);
            let t = apply_tk(f, &tr.s_history[k], &q, u_in, &fx.g).unwrap();
            let sq = apply_sk(f, gamma, &q, &fx.g).unwrap();
            for i in 0..f.len() {
                r[i] += t[i] * gamma;
            }
            let q_next: Vec<_> = (0..f.len()).map(|i| p[i] + sq[i] * (1.0 - mu)).collect();
            p = sq.iter().map(|v| v * mu).collect();
            q = q_next;
        }
        r
    }

    #[test]
    fn folded_recursion_equals_explicit_skip_vector_form() {
        let fx = fixture(8, 6);
        let mut rng = rng(7);
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        let u_in = plane_wave(&fx.grid);
        let residual = random_field(&mut rng, fx.rows.len());
        let cfg = ForwardConfig { max_iters: 9, ..Default::default() };
        let tr = forward_solve(&f, &u_in, &fx.g, &fx.h, &fx.rows, &cfg).unwrap();
        let a = backpropagate(&f, &residual, &fx.g, &fx.h, &fx.rows, &tr).unwrap();
        let b = backprop_p_form(&f, &residual, &u_in, &fx, &tr);
        assert!(rel_err_c(&a, &b) < 1e-12);
    }

    #[test]
    fn output_is_linear_in_the_residual() {
        let fx = fixture(6, 5);
        let mut rng = rng(8);
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        let u_in = plane_wave(&fx.grid);
        let residual = random_field(&mut rng, fx.rows.len());
        let doubled: Vec<_> = residual.iter().map(|v| v * 2.0).collect();
        let cfg = ForwardConfig { max_iters: 6, ..Default::default() };
        let tr = forward_solve(&f, &u_in, &fx.g, &fx.h, &fx.rows, &cfg).unwrap();
        let a = backpropagate(&f, &residual, &fx.g, &fx.h, &fx.rows, &tr).unwrap();
        let b = backpropagate(&f, &doubled, &fx.g, &fx.h, &fx.rows, &tr).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| *y == x * 2.0));
    }

    /// Forward-mode tangent of plain gradient descent with dense matrices:
    /// `u^k = u^{k-1} - nu A^H (A u^{k-1} - u_in)`, `z = H diag(f) u^K`.
    fn dense_directional_derivative(
        f: &[f64],
        d: &[f64],
        y: &[Complex64],
        u_in: &[Complex64],
        nu: f64,
        k: usize,
        fx: &Fixture,
    ) -> f64 {
        let gm = dense_g(&fx.grid);
        let am = dense_a(&gm, f);
        let hm = dense_h(&fx.h);
        let n = f.len();
        let mut u = u_in.to_vec();
        let mut du = vec![Complex64::new(0.0, 0.0); n];
        for _ in 0..k {
            let resid: Vec<_> = matvec(&am, &u).iter().zip(u_in).map(|(a, b)| a - b).collect();
            // dA v = -G (d . v)
            let da_u: Vec<_> =
                matvec(&gm, &(0..n).map(|i| u[i] * d[i]).collect::<Vec<_>>()).iter().map(|v| -v).collect();
            let a_du = matvec(&am, &du);
            let d_resid: Vec<_> = (0..n).map(|i| da_u[i] + a_du[i]).collect();
            let gh_resid = matvec_h(&gm, &resid);
            let dah_resid: Vec<_> = (0..n).map(|i| -gh_resid[i] * d[i]).collect();
            let ah_dresid = matvec_h(&am, &d_resid);
            let grad = matvec_h(&am, &resid);
            for i in 0..n {
                du[i] -= (dah_resid[i] + ah_dresid[i]) * nu;
                u[i] -= grad[i] * nu;
            }
        }
        let z = matvec(&hm, &(0..n).map(|i| u[i] * f[i]).collect::<Vec<_>>());
        let dz = matvec(&hm, &(0..n).map(|i| u[i] * d[i] + du[i] * f[i]).collect::<Vec<_>>());
        z.iter().zip(y).zip(&dz).map(|((a, b), c)| ((a - b).conj() * c).re).sum()
    }

    #[test]
    fn zero_momentum_matches_dense_unrolled_tangent() {
        let fx = fixture(6, 5);
        let mut rng = rng(9);
        let f = random_potential(&mut rng, &fx.grid, 0.2);
        let y = random_field(&mut rng, fx.rows.len());
        let u_in = plane_wave(&fx.grid);
        let mut cfg = fixed_cfg(&f, &fx.g, 4);
        cfg.momentum = false;
        let StepMode::Fixed(nu) = cfg.step_mode else { unreachable!() };
        let grad = gradient_data_fidelity(&f, &y, &u_in, &fx.g, &fx.h, &fx.rows, &cfg).unwrap();
        for _ in 0..3 {
            let d: Vec<f64> = (0..f.len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let lhs: f64 = grad.gradient.iter().zip(&d).map(|(a, b)| a * b).sum();
            let rhs = dense_directional_derivative(&f, &d, &y, &u_in, nu, 4, &fx);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs(), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn truncated_trace_is_rejected() {
        let fx = fixture(6, 4);
        let u_in = plane_wave(&fx.grid);
        let f = vec![1.0; fx.grid.len()];
        let cfg = ForwardConfig { max_iters: 3, ..Default::default() };
        let mut tr = forward_solve(&f, &u_in, &fx.g, &fx.h, &fx.rows, &cfg).unwrap();
        tr.gamma_history.pop();
        let residual = vec![Complex64::new(1.0, 0.0); fx.rows.len()];
        assert!(backpropagate(&f, &residual, &fx.g, &fx.h, &fx.rows, &tr).is_err());
    }
}

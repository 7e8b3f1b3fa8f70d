//! Primal-dual hybrid gradient for `min_x f(Kx) + g(x)`:
//!
//! ```text
//! y ← prox_{σf*}(y + σK x̄)
//! x⁺ ← prox_{τg}(x − τKᴴy)
//! x̄ ← x⁺ + θ(x⁺ − x)
//! ```

use std::time::Instant;

use num_complex::Complex64;

use super::{SolverConfig, SolverTrace, TraceRow};
use crate::error::{Error, Result};
use crate::operator::{norm, Field, LinearOperator};

/// Lower bound applied to the dual step of the data-term conjugate prox.
pub const MIN_DUAL_STEP: f64 = 1e-12;

/// Prox of `σf*` for `f = ½‖· − d‖²`: `(y − σd)/(1 + σ)`.
pub fn prox_l2_data_conjugate(y: &[Complex64], sigma: f64, d: &[Complex64]) -> Vec<Complex64> {
    let s = sigma.max(MIN_DUAL_STEP);
    y.iter().zip(d).map(|(a, b)| (a - b * s) / (1.0 + s)).collect()
}

/// `(σ, τ)` from the config, filling in missing steps so that
/// `σ·τ·‖K‖² ≤ 1`.
pub fn resolve_steps(cfg: &SolverConfig, op_norm: f64) -> Result<(f64, f64)> {
    let l2 = op_norm * op_norm;
    let (sigma, tau) = match (cfg.sigma, cfg.tau) {
        (Some(s), Some(t)) => (s, t),
        _ if l2 == 0.0 => (cfg.sigma.unwrap_or(1.0), cfg.tau.unwrap_or(1.0)),
        (Some(s), None) => (s, 1.0 / (s * l2)),
        (None, Some(t)) => (1.0 / (t * l2), t),
        (None, None) => (1.0 / op_norm, 1.0 / op_norm),
    };
    if sigma * tau * l2 > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "steps violate sigma*tau*|K|^2 <= 1 ({:.4})",
            sigma * tau * l2
        )));
    }
    Ok((sigma, tau))
}

fn axpy<T: Field>(a: &[T], s: f64, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x.add(y.scale(s))).collect()
}

fn diff_norm<T: Field>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x.add(y.scale(-1.0)).abs_sq())
        .sum::<f64>()
        .sqrt()
}

/// Runs PDHG from `x0` with zero dual start.
///
/// `terms(x, Kx)` returns `(f(Kx), g(x))` for the trace. `K x̄` is formed
/// from the stored `Kx` by linearity, so each iteration costs one forward
/// and one adjoint application.
pub fn pdhg<T, K, FC, G, M>(
    k: &K,
    mut f_conj_prox: FC,
    mut g_prox: G,
    x0: Vec<T>,
    cfg: &SolverConfig,
    mut terms: M,
) -> Result<(Vec<T>, SolverTrace)>
where
    T: Field,
    K: LinearOperator<T> + ?Sized,
    FC: FnMut(&[T], f64) -> Result<Vec<T>>,
    G: FnMut(&[T], f64) -> Result<Vec<T>>,
    M: FnMut(&[T], &[T]) -> Result<(f64, f64)>,
{
    cfg.validate()?;
    if x0.len() != k.domain_len() {
        return Err(Error::invalid(format!(
            "x0 has {} entries, operator domain is {}",
            x0.len(),
            k.domain_len()
        )));
    }
    let (sigma, tau) = resolve_steps(cfg, k.norm_estimate())?;
    let start = Instant::now();
    let mut trace = SolverTrace::default();
    let mut x = x0;
    let mut kx = k.apply(&x);
    let mut kx_bar = kx.clone();
    let mut y = vec![T::zero(); k.range_len()];
    let (f0, g0) = terms(&x, &kx)?;
    trace.rows.push(TraceRow {
        iteration: 0,
        objective: f0 + g0,
        misfit: f0,
        reg: g0,
        step_change: 0.0,
        seconds: 0.0,
    });
    let fail = |iteration: usize, message: String, trace: &SolverTrace| Error::Solver {
        iteration,
        message,
        trace: Box::new(trace.clone()),
    };
    for it in 1..=cfg.max_iters {
        y = f_conj_prox(&axpy(&y, sigma, &kx_bar), sigma)?;
        let kty = k.adjoint(&y);
        let x_new = match g_prox(&axpy(&x, -tau, &kty), tau) {
            Ok(v) => v,
            Err(e) => return Err(fail(it, e.to_string(), &trace)),
        };
        if !x_new.iter().all(|v| v.is_finite_value()) {
            return Err(fail(it, "non-finite primal iterate".into(), &trace));
        }
        let kx_new = k.apply(&x_new);
        kx_bar = kx_new
            .iter()
            .zip(&kx)
            .map(|(&a, &b)| a.add(a.add(b.scale(-1.0)).scale(cfg.theta)))
            .collect();
        let change = diff_norm(&x_new, &x);
        let rel = change / norm(&x).max(f64::MIN_POSITIVE);
        x = x_new;
        kx = kx_new;
        let stop = cfg.tol > 0.0 && rel < cfg.tol;
        if it % cfg.trace_stride == 0 || it == cfg.max_iters || stop {
            let (f, g) = terms(&x, &kx)?;
            if !f.is_finite() {
                return Err(fail(it, "non-finite objective".into(), &trace));
            }
            trace.rows.push(TraceRow {
                iteration: it,
                objective: f + g,
                misfit: f,
                reg: g,
                step_change: change,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        if stop {
            break;
        }
    }
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DenseMatrix, Identity};
    use crate::rng;

    fn c(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&a| Complex64::new(a, 0.0)).collect()
    }

    #[test]
    fn conjugate_prox_cases() {
        let y = c(&[2.0, -4.0]);
        assert_eq!(prox_l2_data_conjugate(&y, 1.0, &c(&[0.0, 0.0])), c(&[1.0, -2.0]));
        // Moreau: prox_{σf*}(v) = v − σ prox_{f/σ}(v/σ), prox_{f/σ}(u) = (σu + d)/(σ + 1)
        let mut g = rng::seeded(2);
        let d = rng::complex_normal_vec(&mut g, 4);
        let v = rng::complex_normal_vec(&mut g, 4);
        for s in [0.3, 1.0, 7.0] {
            let direct: Vec<Complex64> = v
                .iter()
                .zip(&d)
                .map(|(&vi, &di)| vi - (vi + di) * (s / (s + 1.0)))
                .collect();
            let ours = prox_l2_data_conjugate(&v, s, &d);
            for (a, b) in ours.iter().zip(&direct) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        assert!(prox_l2_data_conjugate(&y, 0.0, &y).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn steps_respect_the_bound() {
        let cfg = SolverConfig::default();
        let (s, t) = resolve_steps(&cfg, 3.0).unwrap();
        assert!(s * t * 9.0 <= 1.0 + 1e-15);
        let cfg = SolverConfig {
            tau: Some(0.01),
            ..Default::default()
        };
        let (s, t) = resolve_steps(&cfg, 3.0).unwrap();
        assert!((s * t * 9.0 - 1.0).abs() < 1e-12);
        let bad = SolverConfig {
            tau: Some(1.0),
            sigma: Some(1.0),
            ..Default::default()
        };
        assert!(resolve_steps(&bad, 3.0).is_err());
    }

    #[test]
    fn identity_problem_recovers_data() {
        let mut g = rng::seeded(3);
        let d = rng::complex_normal_vec(&mut g, 10);
        let cfg = SolverConfig::default();
        let (x, trace) = pdhg(
            &Identity { len: 10 },
            |y: &[Complex64], s| Ok(prox_l2_data_conjugate(y, s, &d)),
            |v: &[Complex64], _| Ok(v.to_vec()),
            vec![Complex64::new(0.0, 0.0); 10],
            &cfg,
            |_, kx| Ok((0.5 * diff_norm(kx, &d).powi(2), 0.0)),
        )
        .unwrap();
        assert!(diff_norm(&x, &d) / norm(&d) < 1e-6);
        assert_eq!(trace.len(), 201);
    }

    fn soft(v: f64, t: f64) -> f64 {
        v.signum() * (v.abs() - t).max(0.0)
    }

    #[test]
    fn lasso_matches_coordinate_descent() {
        let mut g = rng::seeded(4);
        let (m, n, lambda) = (12, 8, 0.3);
        let a = DenseMatrix::new(m, n, rng::normal_vec(&mut g, m * n)).unwrap();
        let b = rng::normal_vec(&mut g, m);
        let obj = |x: &[f64]| {
            let r: Vec<f64> = a.mul_vec(x).iter().zip(&b).map(|(p, q)| p - q).collect();
            0.5 * r.iter().map(|v| v * v).sum::<f64>() + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
        };
        // oracle: cyclic coordinate descent to stationarity
        let mut xc = vec![0.0; n];
        for _ in 0..20000 {
            for j in 0..n {
                let col: Vec<f64> = (0..m).map(|i| a.get(i, j)).collect();
                let nrm: f64 = col.iter().map(|v| v * v).sum();
                let mut r: Vec<f64> = a.mul_vec(&xc).iter().zip(&b).map(|(p, q)| q - p).collect();
                r.iter_mut().zip(&col).for_each(|(ri, ci)| *ri += ci * xc[j]);
                let rho: f64 = col.iter().zip(&r).map(|(p, q)| p * q).sum();
                xc[j] = soft(rho, lambda) / nrm;
            }
        }
        let cfg = SolverConfig {
            max_iters: 20000,
            trace_stride: 1000,
            ..Default::default()
        };
        let (x, _) = pdhg(
            &a,
            |y: &[f64], s| Ok(y.iter().zip(&b).map(|(p, q)| (p - s * q) / (1.0 + s)).collect()),
            |v: &[f64], t| Ok(v.iter().map(|&p| soft(p, t * lambda)).collect()),
            vec![0.0; n],
            &cfg,
            |x, _| Ok((obj(x), 0.0)),
        )
        .unwrap();
        assert!((obj(&x) - obj(&xc)).abs() < 1e-5, "{} vs {}", obj(&x), obj(&xc));
    }
}

//! Generalized Tikhonov smoothing `½‖D·‖²`.

use super::diff::GradientOperator;
use crate::error::{Error, Result};
use crate::prox::ProxFunction;

pub const DEFAULT_CG_ITERS: usize = 500;
pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// `H(x) = ½‖Dx‖²`. Its prox at step `t` solves `(I + t·DᵀD)x = r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenTikhonov {
    grad: GradientOperator,
    pub cg_iters: usize,
    pub cg_tol: f64,
}

impl GenTikhonov {
    pub fn new(grad: GradientOperator) -> Self {
        Self {
            grad,
            cg_iters: DEFAULT_CG_ITERS,
            cg_tol: DEFAULT_CG_TOL,
        }
    }

    pub fn gradient(&self) -> &GradientOperator {
        &self.grad
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `(I + t·DᵀD)x = r` by conjugate gradients from `x = r`.
/// `tol` is relative to `‖r‖`.
pub fn gen_tikhonov_prox(
    r: &[f64],
    t: f64,
    grad: &GradientOperator,
    cg_iters: usize,
    cg_tol: f64,
) -> Result<Vec<f64>> {
    if r.len() != grad.shape().len() {
        return Err(Error::invalid(format!(
            "gradient built for {} samples, got {}",
            grad.shape().len(),
            r.len()
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("Tikhonov weight must be nonnegative"));
    }
    let op = |x: &[f64]| -> Vec<f64> {
        let dtd = grad.adjoint_real(&grad.apply_real(x));
        x.iter().zip(&dtd).map(|(a, b)| a + t * b).collect()
    };
    let rnorm = dot(r, r).sqrt();
    let mut x = r.to_vec();
    if t == 0.0 || rnorm == 0.0 {
        return Ok(x);
    }
    let ax = op(&x);
    let mut res: Vec<f64> = r.iter().zip(&ax).map(|(a, b)| a - b).collect();
    let mut p = res.clone();
    let mut rr = dot(&res, &res);
    let target = cg_tol * rnorm;
    for _ in 0..cg_iters {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        let ap = op(&p);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        res.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let rr_new = dot(&res, &res);
        let beta = rr_new / rr;
        p.iter_mut().zip(&res).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    if rr.sqrt() <= target {
        return Ok(x);
    }
    Err(Error::Convergence {
        what: "conjugate gradients",
        iterations: cg_iters,
        residual: rr.sqrt() / rnorm,
    })
}

impl ProxFunction for GenTikhonov {
    fn eval(&self, x: &[f64]) -> f64 {
        let g = self.grad.apply_real(x);
        0.5 * dot(&g, &g)
    }
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        gen_tikhonov_prox(x, step, &self.grad, self.cg_iters, self.cg_tol)
    }
    fn domain_len(&self) -> Option<usize> {
        Some(self.grad.shape().len())
    }
    fn name(&self) -> &str {
        "gtik"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Shape;
    use crate::rng;

    /// Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            b.swap(c, piv);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn zero_weight_and_constants_are_fixed() {
        let g = GradientOperator::spatial(Shape::single(5, 4));
        let mut rg = rng::seeded(3);
        let r = rng::normal_vec(&mut rg, 20);
        assert_eq!(gen_tikhonov_prox(&r, 0.0, &g, 10, 1e-10).unwrap(), r);
        let c = vec![0.4; 20];
        let x = gen_tikhonov_prox(&c, 3.0, &g, 100, 1e-12).unwrap();
        assert!(x.iter().all(|v| (v - 0.4).abs() < 1e-14));
    }

    #[test]
    fn matches_dense_solve_on_8x8() {
        let s = Shape::single(8, 8);
        let g = GradientOperator::spatial(s);
        let n = s.len();
        let mut rg = rng::seeded(4);
        let r = rng::normal_vec(&mut rg, n);
        let x = gen_tikhonov_prox(&r, 1.0, &g, 500, 1e-12).unwrap();
        // assemble I + DᵀD column by column
        let mut a = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = g.adjoint_real(&g.apply_real(&e));
            for i in 0..n {
                a[i][j] = col[i] + if i == j { 1.0 } else { 0.0 };
            }
        }
        let mut ax = vec![0.0; n];
        for i in 0..n {
            ax[i] = dot(&a[i], &x);
        }
        let res: f64 = ax.iter().zip(&r).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(res / dot(&r, &r).sqrt() < 1e-8);
        let direct = dense_solve(a, r);
        for (p, q) in x.iter().zip(&direct) {
            assert!((p - q).abs() < 1e-7);
        }
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let g = GradientOperator::spatial(Shape::single(8, 8));
        let mut rg = rng::seeded(5);
        let r = rng::normal_vec(&mut rg, 64);
        assert!(matches!(
            gen_tikhonov_prox(&r, 10.0, &g, 2, 1e-14),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn nonnegative_inputs_stay_nonnegative() {
        let s = Shape::new(3, 6, 6);
        let h = GenTikhonov::new(GradientOperator::with_channel(s, 10.0));
        let mut rg = rng::seeded(6);
        for _ in 0..10 {
            let r: Vec<f64> = rng::normal_vec(&mut rg, s.len()).iter().map(|v| v.abs()).collect();
            let x = h.prox(&r, 0.7).unwrap();
            assert!(x.iter().all(|&v| v >= -1e-10));
        }
    }
}

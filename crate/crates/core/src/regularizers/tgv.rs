//! Second-order total generalized variation
//! `TGV²(u) = min_w α‖Du − w‖₂,₁ + β‖𝓔w‖₂,₁`.

use super::diff::{GradientOperator, SymGradOperator};
use super::tv::{group_norm, project_groups, Grouping};
use crate::error::{Error, Result};
use crate::prox::ProxFunction;

pub const DEFAULT_TGV_INNER_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Tgv2 {
    grad: GradientOperator,
    sym: SymGradOperator,
    pub alpha: f64,
    pub beta: f64,
    /// Inner primal-dual iterations per prox call.
    pub inner_iters: usize,
    /// Inner iterations used by [`ProxFunction::eval`].
    pub eval_iters: usize,
    /// Early exit when the relative change of `(u, w)` drops below this.
    pub inner_tol: f64,
}

#[derive(Debug, Clone)]
pub struct TgvProxResult {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// `½‖u − y‖² + t(α‖Du − w‖ + β‖𝓔w‖)` at the returned pair.
    pub objective: f64,
    /// Norm of the dual optimality residual `p − 𝓔ᵀq` in the `w` block.
    pub dual_residual: f64,
    pub iterations: usize,
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

impl Tgv2 {
    pub fn new(grad: GradientOperator, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::invalid("TGV weights must be positive"));
        }
        let sym = SymGradOperator::new(grad.clone());
        Ok(Self {
            grad,
            sym,
            alpha,
            beta,
            inner_iters: DEFAULT_TGV_INNER_ITERS,
            eval_iters: 4 * DEFAULT_TGV_INNER_ITERS,
            inner_tol: 0.0,
        })
    }

    pub fn with_inner_iters(mut self, iters: usize) -> Self {
        self.inner_iters = iters;
        self
    }

    pub fn gradient(&self) -> &GradientOperator {
        &self.grad
    }

    fn n(&self) -> usize {
        self.grad.shape().len()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::invalid(format!(
                "TGV built for {} samples, got {len}",
                self.n()
            )));
        }
        Ok(())
    }

    /// `α‖Du − w‖₂,₁ + β‖𝓔w‖₂,₁` for a given `w`.
    pub fn energy(&self, u: &[f64], w: &[f64]) -> f64 {
        let n = self.n();
        let d = self.grad.components();
        let du = self.grad.apply_real(u);
        let diff: Vec<f64> = du.iter().zip(w).map(|(a, b)| a - b).collect();
        let ew = self.sym.apply_real(w);
        self.alpha * group_norm(&diff, n, d, Grouping::Pixel)
            + self.beta * group_norm(&ew, n, d * d, Grouping::Pixel)
    }

    /// Inner minimum over `w` by primal-dual iterations started at `w = Du`;
    /// returns the smallest energy seen.
    pub fn value(&self, u: &[f64], iters: usize) -> Result<f64> {
        self.check(u.len())?;
        let n = self.n();
        let d = self.grad.components();
        if d == 0 {
            return Ok(0.0);
        }
        let c = self.grad.apply_real(u);
        let mut w = c.clone();
        let mut best = self.energy(u, &w);
        let lip = (1.0 + self.sym.norm_sq_bound()).sqrt();
        let (sigma, tau) = (1.0 / lip, 1.0 / lip);
        let mut p = vec![0.0; n * d];
        let mut q = vec![0.0; n * d * d];
        let mut w_bar = w.clone();
        for _ in 0..iters {
            // f₁(s) = α‖c − s‖: prox of σf₁* is projection of v − σc
            for ((pi, wb), ci) in p.iter_mut().zip(&w_bar).zip(&c) {
                *pi += sigma * (wb - ci);
            }
            project_groups(&mut p, n, d, Grouping::Pixel, self.alpha);
            let ew = self.sym.apply_real(&w_bar);
            q.iter_mut().zip(&ew).for_each(|(qi, e)| *qi += sigma * e);
            project_groups(&mut q, n, d * d, Grouping::Pixel, self.beta);
            let etq = self.sym.adjoint_real(&q);
            let w_old = w.clone();
            for ((wi, pi), ei) in w.iter_mut().zip(&p).zip(&etq) {
                *wi -= tau * (pi + ei);
            }
            for ((wb, wi), wo) in w_bar.iter_mut().zip(&w).zip(&w_old) {
                *wb = 2.0 * wi - wo;
            }
            best = best.min(self.energy(u, &w));
        }
        Ok(best)
    }

    /// `argmin_u ½‖u − y‖² + t·TGV²(u)` by a joint primal-dual loop over
    /// `(u, w)` started at `(y, Dy)`; the best primal pair is returned.
    pub fn prox_detailed(&self, y: &[f64], t: f64, iters: usize) -> Result<TgvProxResult> {
        self.check(y.len())?;
        let n = self.n();
        let d = self.grad.components();
        let primal = |u: &[f64], w: &[f64]| {
            0.5 * u.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + t * self.energy(u, w)
        };
        let mut u = y.to_vec();
        let mut w = self.grad.apply_real(y);
        if d == 0 || t <= 0.0 {
            let objective = primal(&u, &w);
            return Ok(TgvProxResult {
                u,
                w,
                objective,
                dual_residual: 0.0,
                iterations: 0,
            });
        }
        let (ra, rb) = (t * self.alpha, t * self.beta);
        let l2 = (2.0 * self.grad.norm_sq_bound()).max(2.0 + self.sym.norm_sq_bound());
        let (sigma, tau) = (1.0 / l2.sqrt(), 1.0 / l2.sqrt());
        let mut p = vec![0.0; n * d];
        let mut q = vec![0.0; n * d * d];
        let (mut u_bar, mut w_bar) = (u.clone(), w.clone());
        let mut best = (u.clone(), w.clone(), primal(&u, &w));
        let mut done = 0;
        for it in 0..iters {
            done = it + 1;
            let du = self.grad.apply_real(&u_bar);
            for ((pi, a), b) in p.iter_mut().zip(&du).zip(&w_bar) {
                *pi += sigma * (a - b);
            }
            project_groups(&mut p, n, d, Grouping::Pixel, ra);
            let ew = self.sym.apply_real(&w_bar);
            q.iter_mut().zip(&ew).for_each(|(qi, e)| *qi += sigma * e);
            project_groups(&mut q, n, d * d, Grouping::Pixel, rb);

            let dtp = self.grad.adjoint_real(&p);
            let etq = self.sym.adjoint_real(&q);
            let (u_old, w_old) = (u.clone(), w.clone());
            for ((ui, gi), yi) in u.iter_mut().zip(&dtp).zip(y) {
                *ui = (*ui - tau * gi + tau * yi) / (1.0 + tau);
            }
            for ((wi, pi), ei) in w.iter_mut().zip(&p).zip(&etq) {
                *wi -= tau * (-pi + ei);
            }
            for (b, (new, old)) in u_bar.iter_mut().zip(u.iter().zip(&u_old)) {
                *b = 2.0 * new - old;
            }
            for (b, (new, old)) in w_bar.iter_mut().zip(w.iter().zip(&w_old)) {
                *b = 2.0 * new - old;
            }
            let f = primal(&u, &w);
            if f < best.2 {
                best = (u.clone(), w.clone(), f);
            }
            if self.inner_tol > 0.0 {
                let change = (sq(&u.iter().zip(&u_old).map(|(a, b)| a - b).collect::<Vec<_>>())
                    + sq(&w.iter().zip(&w_old).map(|(a, b)| a - b).collect::<Vec<_>>()))
                .sqrt();
                let scale = (sq(&u) + sq(&w)).sqrt().max(1e-300);
                if change <= self.inner_tol * scale {
                    break;
                }
            }
        }
        let etq = self.sym.adjoint_real(&q);
        let resid: Vec<f64> = p.iter().zip(&etq).map(|(a, b)| a - b).collect();
        let (u, w, objective) = best;
        Ok(TgvProxResult {
            u,
            w,
            objective,
            dual_residual: sq(&resid).sqrt(),
            iterations: done,
        })
    }
}

/// `TGV²_{α,β}(u)` by inner iterations over `w`.
pub fn tgv2_eval(u: &[f64], grad: &GradientOperator, alpha: f64, beta: f64, inner_iters: usize) -> Result<f64> {
    Tgv2::new(grad.clone(), alpha, beta)?.value(u, inner_iters)
}

/// `argmin_x ½‖x − u‖² + τ·TGV²_{α,β}(x)`.
pub fn tgv2_prox(
    u: &[f64],
    grad: &GradientOperator,
    alpha: f64,
    beta: f64,
    tau: f64,
    inner_iters: usize,
) -> Result<Vec<f64>> {
    Ok(Tgv2::new(grad.clone(), alpha, beta)?
        .prox_detailed(u, tau, inner_iters)?
        .u)
}

impl ProxFunction for Tgv2 {
    fn eval(&self, x: &[f64]) -> f64 {
        self.value(x, self.eval_iters).unwrap_or(f64::INFINITY)
    }
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        Ok(self.prox_detailed(x, step, self.inner_iters)?.u)
    }
    fn domain_len(&self) -> Option<usize> {
        Some(self.n())
    }
    fn name(&self) -> &str {
        "tgv2"
    }
}

//! Douglas-Rachford splitting for `min A(x) + B(x)` given both proxes:
//!
//! ```text
//! x_{k+1} = prox_A(y_k)
//! y_{k+1} = y_k + prox_B(2x_{k+1} − y_k) − x_{k+1}
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DrOutcome {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖x_{k+1} − x_k‖∞` per iteration.
    pub changes: Vec<f64>,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Core loop, shared with the bounded prox. `x0` must equal `prox_a(y0)`.
/// `stop(x, change)` is checked after every iteration.
pub(crate) fn dr_loop<A, B, S>(
    mut prox_a: A,
    mut prox_b: B,
    mut y: Vec<f64>,
    mut x: Vec<f64>,
    max_iters: usize,
    mut stop: S,
) -> Result<DrOutcome>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
    B: FnMut(&[f64]) -> Vec<f64>,
    S: FnMut(&[f64], f64) -> bool,
{
    let mut changes = Vec::new();
    let mut reflected = vec![0.0; y.len()];
    for k in 1..=max_iters {
        for ((r, &xi), &yi) in reflected.iter_mut().zip(&x).zip(&y) {
            *r = 2.0 * xi - yi;
        }
        let pb = prox_b(&reflected);
        for ((yi, &pbi), &xi) in y.iter_mut().zip(&pb).zip(&x) {
            *yi += pbi - xi;
        }
        let x_new = prox_a(&y)?;
        let change = max_abs_diff(&x_new, &x);
        if !change.is_finite() {
            return Err(Error::Numerical("douglas-rachford iterate".into()));
        }
        x = x_new;
        changes.push(change);
        if stop(&x, change) {
            return Ok(DrOutcome {
                x,
                y,
                iterations: k,
                converged: true,
                changes,
            });
        }
    }
    Ok(DrOutcome {
        x,
        y,
        iterations: max_iters,
        converged: false,
        changes,
    })
}

/// Runs DR from `y0` until `‖x_{k+1} − x_k‖∞ < tol`. Exhausting the budget
/// is a convergence error.
pub fn douglas_rachford<A, B>(
    mut prox_a: A,
    prox_b: B,
    y0: Vec<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<DrOutcome>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
    B: FnMut(&[f64]) -> Vec<f64>,
{
    let x0 = prox_a(&y0)?;
    let out = dr_loop(prox_a, prox_b, y0, x0, max_iters, |_, change| change < tol)?;
    if !out.converged {
        return Err(Error::Convergence {
            what: "douglas-rachford",
            iterations: out.iterations,
            residual: out.changes.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

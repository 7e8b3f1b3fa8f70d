//! Weighted p-norms, the squared 2-norm, and the matrix-weighted 1-norm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::DenseMatrix;
use crate::prox::ProxFunction;

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Uniform(f64),
    PerElement(Vec<f64>),
}

impl Weights {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerElement(w) => w[i],
        }
    }
}

/// `‖diag(w) x‖_p` for `p ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLp {
    weights: Weights,
    p: u8,
}

impl WeightedLp {
    pub fn new(weights: Weights, p: u8) -> Result<Self> {
        if p != 1 && p != 2 {
            return Err(Error::Unsupported(format!("weighted p-norm with p = {p}")));
        }
        let ok = match &weights {
            Weights::Uniform(w) => *w > 0.0,
            Weights::PerElement(w) => !w.is_empty() && w.iter().all(|&v| v > 0.0),
        };
        if !ok {
            return Err(Error::invalid("weights must be positive"));
        }
        Ok(Self { weights, p })
    }

    pub fn uniform(weight: f64, p: u8) -> Result<Self> {
        Self::new(Weights::Uniform(weight), p)
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match &self.weights {
            Weights::PerElement(w) if w.len() != n => Err(Error::invalid(format!(
                "{} weights for {n} samples",
                w.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl ProxFunction for WeightedLp {
    fn eval(&self, x: &[f64]) -> f64 {
        let it = x.iter().enumerate().map(|(i, &v)| self.weights.at(i) * v);
        match self.p {
            1 => it.map(f64::abs).sum(),
            _ => it.map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        if step == 0.0 {
            return Ok(x.to_vec());
        }
        match self.p {
            1 => Ok(x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let t = step * self.weights.at(i);
                    v.signum() * (v.abs() - t).max(0.0)
                })
                .collect()),
            _ => Ok(block_l2_prox(x, &self.weights, step)),
        }
    }

    fn domain_len(&self) -> Option<usize> {
        match &self.weights {
            Weights::Uniform(_) => None,
            Weights::PerElement(w) => Some(w.len()),
        }
    }

    fn name(&self) -> &str {
        if self.p == 1 {
            "l1"
        } else {
            "l2"
        }
    }
}

/// Prox of `τ‖diag(w)x‖₂`. For uniform weights this is block soft
/// thresholding; otherwise `x_i = v_i / (1 + τw_i²/s)` with `s = ‖Wx‖`
/// found by bisection on the secular equation `Σ w_i²v_i²/(s + τw_i²)² = 1`.
fn block_l2_prox(v: &[f64], weights: &Weights, step: f64) -> Vec<f64> {
    match weights {
        Weights::Uniform(w) => {
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let t = step * w;
            if n <= t {
                vec![0.0; v.len()]
            } else {
                let s = 1.0 - t / n;
                v.iter().map(|a| a * s).collect()
            }
        }
        Weights::PerElement(w) => {
            // zero iff the dual norm ‖W⁻¹v‖ is within the step
            let dual = v
                .iter()
                .zip(w)
                .map(|(a, wi)| (a / wi).powi(2))
                .sum::<f64>()
                .sqrt();
            if dual <= step {
                return vec![0.0; v.len()];
            }
            let h = |s: f64| -> f64 {
                v.iter()
                    .zip(w)
                    .map(|(a, wi)| (wi * a / (s + step * wi * wi)).powi(2))
                    .sum::<f64>()
            };
            let mut lo = 0.0;
            let mut hi = v
                .iter()
                .zip(w)
                .map(|(a, wi)| (a * wi).powi(2))
                .sum::<f64>()
                .sqrt();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if h(mid) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-12 * hi.max(1e-300) {
                    break;
                }
            }
            let s = 0.5 * (lo + hi);
            v.iter()
                .zip(w)
                .map(|(a, wi)| a * s / (s + step * wi * wi))
                .collect()
        }
    }
}

/// `λ‖x‖₂²`, prox `x / (1 + 2λτ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredL2 {
    pub lambda: f64,
}

impl SquaredL2 {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }
}

impl ProxFunction for SquaredL2 {
    fn eval(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        let s = 1.0 / (1.0 + 2.0 * self.lambda * step);
        Ok(x.iter().map(|v| v * s).collect())
    }
    fn name(&self) -> &str {
        "l2sq"
    }
}

/// `‖Wx‖₁` for a dense square `W`.
///
/// The prox is computed from the dual box-constrained least squares
/// `min_{|u|∞ ≤ τ} ½‖v − Wᵀu‖²` by cyclic coordinate descent, with
/// `x = v − Wᵀu`. The descent only has to find the active set; the free
/// duals are then solved for directly.
#[derive(Debug, Clone)]
pub struct MatrixWeightedL1 {
    w: DenseMatrix,
    row_norm_sq: Vec<f64>,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl MatrixWeightedL1 {
    pub fn new(w: DenseMatrix) -> Self {
        let row_norm_sq = w
            .data
            .chunks_exact(w.cols)
            .map(|r| r.iter().map(|a| a * a).sum())
            .collect();
        Self {
            w,
            row_norm_sq,
            max_sweeps: 200_000,
            tol: 1e-15,
        }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.w
    }

    /// Solves the dual exactly on the active set guessed from `u`: duals at
    /// `±τ` stay fixed, the rest solve `W_F W_Fᵀ u_F = W_F (v − W_Aᵀ u_A)`.
    /// Returns `x` only if the result satisfies the KKT conditions.
    fn polish(&self, v: &[f64], u: &[f64], step: f64, scale: f64) -> Option<Vec<f64>> {
        let (m, n) = (self.w.rows, self.w.cols);
        let w = DMatrix::from_row_slice(m, n, &self.w.data);
        let free: Vec<usize> = (0..m).filter(|&i| u[i].abs() < step).collect();
        let mut u_new: Vec<f64> = u.iter().map(|&a| if a.abs() < step { 0.0 } else { a }).collect();
        let rhs = DVector::from_column_slice(v) - w.transpose() * DVector::from_column_slice(&u_new);
        if !free.is_empty() {
            let wf = w.select_rows(&free);
            let gram = &wf * wf.transpose();
            let b = &wf * &rhs;
            let sol = gram.svd(true, true).solve(&b, 1e-13).ok()?;
            for (k, &i) in free.iter().enumerate() {
                u_new[i] = sol[k];
            }
        }
        let x = DVector::from_column_slice(v) - w.transpose() * DVector::from_column_slice(&u_new);
        let wx = &w * &x;
        let tol = 1e-12 * scale;
        for i in 0..m {
            let ok = if free.contains(&i) {
                u_new[i].abs() <= step + tol && wx[i].abs() <= tol * (1.0 + self.row_norm_sq[i].sqrt())
            } else {
                u_new[i].signum() * wx[i] >= -tol
            };
            if !ok {
                return None;
            }
        }
        Some(x.iter().copied().collect())
    }
}

const POLISH_EVERY: usize = 20;

impl ProxFunction for MatrixWeightedL1 {
    fn eval(&self, x: &[f64]) -> f64 {
        self.w.mul_vec(x).iter().map(|v| v.abs()).sum()
    }

    fn prox(&self, v: &[f64], step: f64) -> Result<Vec<f64>> {
        let n = self.w.cols;
        if v.len() != n {
            return Err(Error::invalid(format!("W has {n} columns, input has {}", v.len())));
        }
        if step == 0.0 {
            return Ok(v.to_vec());
        }
        let mut u = vec![0.0; self.w.rows];
        let mut x = v.to_vec();
        let scale = 1.0 + v.iter().map(|a| a.abs()).fold(0.0, f64::max);
        for sweep in 1..=self.max_sweeps {
            let mut moved = 0.0f64;
            for i in 0..self.w.rows {
                if self.row_norm_sq[i] == 0.0 {
                    continue;
                }
                let row = &self.w.data[i * n..(i + 1) * n];
                let wx: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
                let ui = (u[i] + wx / self.row_norm_sq[i]).clamp(-step, step);
                let du = ui - u[i];
                if du != 0.0 {
                    u[i] = ui;
                    x.iter_mut().zip(row).for_each(|(xj, a)| *xj -= du * a);
                    moved = moved.max(du.abs() * self.row_norm_sq[i].sqrt());
                }
            }
            if moved <= self.tol * scale {
                return Ok(x);
            }
            if sweep % POLISH_EVERY == 0 {
                if let Some(exact) = self.polish(v, &u, step, scale) {
                    return Ok(exact);
                }
            }
        }
        Err(Error::Convergence {
            what: "matrix-weighted l1 prox",
            iterations: self.max_sweeps,
            residual: f64::NAN,
        })
    }

    fn domain_len(&self) -> Option<usize> {
        Some(self.w.cols)
    }

    fn name(&self) -> &str {
        "wl1-matrix"
    }
}

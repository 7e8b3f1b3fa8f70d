//! Parametric level-set images and the magnitude projection onto them.
//!
//! ```text
//! φ(r) = Σⱼ σ(αⱼ) ψ(‖Rⱼ(r − χⱼ)‖)
//! f(r) = C_L + (C_H − C_L) T_w(φ(r) − c)
//! ```
//!
//! with `ψ(ρ) = (1 − ρ)⁴₊(4ρ + 1)` (Wendland C²), `σ` the logistic
//! function, `T_w(t) = σ(t/w)` and `Rⱼ = diag(e^{βⱼ₁}, e^{βⱼ₂})·rot(γⱼ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{split_slice, ComplexImage, Shape};
use crate::par;
use crate::sar::SceneGrid;

pub const DEFAULT_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetParams {
    pub alpha: Vec<f64>,
    /// Basis centers in scene coordinates.
    pub centers: Vec<[f64; 2]>,
    /// Log axis scales per basis.
    pub beta: Vec<[f64; 2]>,
    /// Rotation angle per basis, rad.
    pub gamma: Vec<f64>,
    pub c_high: f64,
    pub c_low: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    pub width: f64,
}

fn default_level() -> f64 {
    DEFAULT_LEVEL
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ψ(ρ)` and `ψ′(ρ)/ρ`.
#[inline]
fn wendland(rho: f64) -> (f64, f64) {
    if rho >= 1.0 {
        return (0.0, 0.0);
    }
    let a = 1.0 - rho;
    let a3 = a * a * a;
    (a3 * a * (4.0 * rho + 1.0), -20.0 * a3)
}

impl LevelSetParams {
    pub fn bases(&self) -> usize {
        self.alpha.len()
    }

    /// Number of optimized parameters: `α`, `β` (two per basis), `γ`.
    pub fn shape_params(&self) -> usize {
        4 * self.bases()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.alpha.len();
        if n == 0 {
            return Err(Error::invalid("level set needs at least one basis function"));
        }
        if self.centers.len() != n || self.beta.len() != n || self.gamma.len() != n {
            return Err(Error::invalid("alpha, centers, beta and gamma must have equal length"));
        }
        if !(self.c_high >= self.c_low && self.c_low >= 0.0) {
            return Err(Error::invalid("need c_high >= c_low >= 0"));
        }
        if !(self.width > 0.0) {
            return Err(Error::invalid("transition width must be positive"));
        }
        let all = self
            .alpha
            .iter()
            .chain(self.gamma.iter())
            .chain(self.centers.iter().flatten())
            .chain(self.beta.iter().flatten())
            .copied()
            .chain([self.level, self.c_high, self.c_low, self.width]);
        if !all.into_iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("level-set parameters must be finite"));
        }
        Ok(())
    }

    /// `[α, β₁₁, β₁₂, β₂₁, …, γ]`
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.alpha.clone();
        v.extend(self.beta.iter().flatten());
        v.extend(&self.gamma);
        v
    }

    pub fn with_vector(&self, v: &[f64]) -> Self {
        let n = self.bases();
        let mut p = self.clone();
        p.alpha.copy_from_slice(&v[..n]);
        for j in 0..n {
            p.beta[j] = [v[n + 2 * j], v[n + 2 * j + 1]];
        }
        p.gamma.copy_from_slice(&v[3 * n..4 * n]);
        p
    }

    /// `φ` at a point.
    pub fn phi(&self, r: [f64; 2]) -> f64 {
        (0..self.bases())
            .map(|j| logistic(self.alpha[j]) * wendland(self.local(j, r).2).0)
            .sum()
    }

    /// `(q, s, ‖q‖)` with `s = rot(γ)(r − χ)` and `q = diag(e^β) s`.
    #[inline]
    fn local(&self, j: usize, r: [f64; 2]) -> ([f64; 2], [f64; 2], f64) {
        let (sn, cs) = self.gamma[j].sin_cos();
        let v = [r[0] - self.centers[j][0], r[1] - self.centers[j][1]];
        let s = [cs * v[0] - sn * v[1], sn * v[0] + cs * v[1]];
        let q = [self.beta[j][0].exp() * s[0], self.beta[j][1].exp() * s[1]];
        (q, s, (q[0] * q[0] + q[1] * q[1]).sqrt())
    }

    pub fn value_at(&self, r: [f64; 2]) -> f64 {
        self.c_low + (self.c_high - self.c_low) * logistic((self.phi(r) - self.level) / self.width)
    }

    /// Pixel value and its gradient with respect to [`Self::to_vector`].
    fn value_and_gradient(&self, r: [f64; 2]) -> (f64, Vec<f64>) {
        let n = self.bases();
        let mut g = vec![0.0; 4 * n];
        let mut phi = 0.0;
        for j in 0..n {
            let (q, s, rho) = self.local(j, r);
            let (psi, dpsi_over_rho) = wendland(rho);
            let sig = logistic(self.alpha[j]);
            phi += sig * psi;
            g[j] = sig * (1.0 - sig) * psi;
            // ∂ψ/∂q = ψ′(ρ) q/ρ
            let gq = [dpsi_over_rho * q[0], dpsi_over_rho * q[1]];
            g[n + 2 * j] = sig * gq[0] * q[0];
            g[n + 2 * j + 1] = sig * gq[1] * q[1];
            let dq_dgamma = [-self.beta[j][0].exp() * s[1], self.beta[j][1].exp() * s[0]];
            g[3 * n + j] = sig * (gq[0] * dq_dgamma[0] + gq[1] * dq_dgamma[1]);
        }
        let t = logistic((phi - self.level) / self.width);
        let scale = (self.c_high - self.c_low) * t * (1.0 - t) / self.width;
        g.iter_mut().for_each(|v| *v *= scale);
        (self.c_low + (self.c_high - self.c_low) * t, g)
    }
}

fn grid_points(grid: &SceneGrid) -> impl Fn(usize) -> [f64; 2] + Sync + '_ {
    move |i| {
        let p = grid.position(i);
        [p[0], p[1]]
    }
}

/// Renders `f(p)` on the grid; values lie in `[C_L, C_H]`.
pub fn palentir_render(p: &LevelSetParams, grid: &SceneGrid) -> Result<Vec<f64>> {
    p.validate()?;
    let pt = grid_points(grid);
    Ok(par::map_range(grid.len(), |i| p.value_at(pt(i))))
}

/// Jacobian of the rendered image, row-major `pixels × 4N`.
pub fn palentir_jacobian(p: &LevelSetParams, grid: &SceneGrid) -> Result<DMatrix<f64>> {
    p.validate()?;
    let pt = grid_points(grid);
    let rows = par::map_range(grid.len(), |i| p.value_and_gradient(pt(i)).1);
    let k = p.shape_params();
    Ok(DMatrix::from_fn(grid.len(), k, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetFit {
    pub params: LevelSetParams,
    pub image: Vec<f64>,
    /// `½‖f(p) − r‖²` at the start and after each accepted step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    /// The line search failed before the iteration budget ran out.
    pub stalled: bool,
}

fn half_sq_residual(f: &[f64], r: &[f64]) -> f64 {
    0.5 * f.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
}

/// Local projection `argmin_p ½‖f(p) − r‖²` over `(α, β, γ)` by damped
/// Gauss–Newton with backtracking, starting from `p0`. Centers, contrasts,
/// level and width stay fixed.
pub fn levelset_project(r: &[f64], grid: &SceneGrid, p0: &LevelSetParams, gn_iters: usize) -> Result<LevelSetFit> {
    p0.validate()?;
    if p0.c_high == p0.c_low {
        return Err(Error::invalid("projection needs c_high > c_low"));
    }
    if r.len() != grid.len() {
        return Err(Error::invalid(format!(
            "image has {} pixels, grid has {}",
            r.len(),
            grid.len()
        )));
    }
    if r.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("level-set projection needs a nonnegative image"));
    }
    let rnorm2: f64 = r.iter().map(|v| v * v).sum();
    let mut p = p0.clone();
    let mut f = palentir_render(&p, grid)?;
    let mut obj = half_sq_residual(&f, r);
    let mut history = vec![obj];
    let mut mu = 1e-3;
    let mut stalled = false;
    let mut iterations = 0;
    let tiny = 1e-30 * rnorm2.max(1.0);
    while iterations < gn_iters && obj > tiny {
        let jac = palentir_jacobian(&p, grid)?;
        let e = DVector::from_iterator(f.len(), f.iter().zip(r).map(|(a, b)| a - b));
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &e;
        if grad.amax() == 0.0 {
            break;
        }
        let x = DVector::from_vec(p.to_vector());
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += mu * (jtj[(i, i)] + 1e-12);
            }
            let Some(chol) = a.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&grad));
            let mut t = 1.0;
            for _ in 0..8 {
                let cand = p.with_vector((&x + &delta * t).as_slice());
                let fc = palentir_render(&cand, grid)?;
                let oc = half_sq_residual(&fc, r);
                if oc < obj {
                    p = cand;
                    f = fc;
                    obj = oc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                mu = (mu / 3.0).max(1e-12);
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            stalled = true;
            break;
        }
        iterations += 1;
        history.push(obj);
        let prev = history[history.len() - 2];
        if prev - obj <= 1e-15 * prev {
            break;
        }
    }
    Ok(LevelSetFit {
        params: p,
        image: f,
        objective: history,
        iterations,
        stalled,
    })
}

/// Projects `|z|` onto the level-set family and reattaches the phase of `z`.
pub fn levelset_prox_complex(
    z: &ComplexImage,
    grid: &SceneGrid,
    p0: &LevelSetParams,
    gn_iters: usize,
) -> Result<(ComplexImage, LevelSetFit)> {
    let s = z.shape();
    if s.channels != 1 || s.height != grid.height || s.width != grid.width {
        return Err(Error::invalid(format!(
            "level-set prox needs a single-channel {}x{} image, got {s}",
            grid.height, grid.width
        )));
    }
    let (r, phase) = split_slice(z.data())?;
    let fit = levelset_project(&r, grid, p0, gn_iters)?;
    let out: Vec<Complex64> = fit.image.iter().zip(&phase).map(|(&m, &p)| p * m).collect();
    Ok((ComplexImage::new(Shape::single(s.height, s.width), out)?, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SceneGrid {
        SceneGrid::new([0.0, 0.0], 1.0, 16, 16).unwrap()
    }

    fn one_blob() -> LevelSetParams {
        LevelSetParams {
            alpha: vec![4.0],
            centers: vec![[7.5, 7.5]],
            beta: vec![[(1.0f64 / 5.0).ln(), (1.0f64 / 4.0).ln()]],
            gamma: vec![0.3],
            c_high: 1.0,
            c_low: 0.1,
            level: DEFAULT_LEVEL,
            width: 0.05,
        }
    }

    #[test]
    fn equal_contrasts_render_constant() {
        let mut p = one_blob();
        p.c_high = 0.5;
        p.c_low = 0.5;
        let img = palentir_render(&p, &grid()).unwrap();
        assert!(img.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn empty_level_set_renders_low() {
        let mut p = one_blob();
        p.alpha = vec![-50.0];
        p.width = 0.002;
        let img = palentir_render(&p, &grid()).unwrap();
        assert!(img.iter().all(|v| (v - p.c_low).abs() < 1e-6));
    }

    #[test]
    fn single_blob_matches_pointwise_formula() {
        let mut p = one_blob();
        p.alpha = vec![30.0];
        p.width = 0.002;
        let g = grid();
        let img = palentir_render(&p, &g).unwrap();
        for (i, &v) in img.iter().enumerate() {
            let q = g.position(i);
            // independent evaluation
            let (sn, cs) = 0.3f64.sin_cos();
            let (dx, dy) = (q[0] - 7.5, q[1] - 7.5);
            let (sx, sy) = (cs * dx - sn * dy, sn * dx + cs * dy);
            let rho = ((sx / 5.0).powi(2) + (sy / 4.0).powi(2)).sqrt();
            let psi = if rho < 1.0 { (1.0 - rho).powi(4) * (4.0 * rho + 1.0) } else { 0.0 };
            let t = 1.0 / (1.0 + (-(psi - 0.05) / 0.002).exp());
            assert!((v - (0.1 + 0.9 * t)).abs() < 1e-12);
        }
        let center = g.nearest([7.5, 7.5, 0.0]).unwrap();
        assert!(img[center] > 0.99);
        assert!((img[0] - 0.1).abs() < 1e-6);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut p = one_blob();
        p.alpha = vec![0.7];
        p.width = 0.2;
        let g = grid();
        let jac = palentir_jacobian(&p, &g).unwrap();
        let x = p.to_vector();
        let h = 1e-6;
        for k in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            let fp = palentir_render(&p.with_vector(&xp), &g).unwrap();
            let fm = palentir_render(&p.with_vector(&xm), &g).unwrap();
            let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let num: f64 = (0..fd.len()).map(|i| (jac[(i, k)] - fd[i]).powi(2)).sum::<f64>().sqrt();
            let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(num / den < 1e-5, "param {k}: {}", num / den);
        }
    }

    #[test]
    fn rendered_input_is_a_fixed_point() {
        let p = one_blob();
        let g = grid();
        let r = palentir_render(&p, &g).unwrap();
        let fit = levelset_project(&r, &g, &p, 20).unwrap();
        assert_eq!(fit.iterations, 0);
        assert!(fit.objective[0] < 1e-20);
    }

    #[test]
    fn params_round_trip_through_json() {
        let p = one_blob();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<LevelSetParams>(&s).unwrap(), p);
    }
}

//! Forward-difference gradient and symmetrised gradient.
//!
//! Boundary rule: a difference that would reach past the last sample along
//! its axis is zero (replicate/Neumann). Constants are therefore in the
//! kernel of the gradient, and affine images are in the kernel of the
//! symmetrised gradient applied to their gradient.

use serde::{Deserialize, Serialize};

use crate::image::Shape;
use crate::operator::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffAxis {
    /// Across channels: depth, time or look angle.
    Channel,
    Row,
    Col,
}

impl DiffAxis {
    fn extent(self, s: Shape) -> usize {
        match self {
            DiffAxis::Channel => s.channels,
            DiffAxis::Row => s.height,
            DiffAxis::Col => s.width,
        }
    }

    fn stride(self, s: Shape) -> usize {
        match self {
            DiffAxis::Channel => s.plane(),
            DiffAxis::Row => s.width,
            DiffAxis::Col => 1,
        }
    }

    #[inline]
    fn coord(self, s: Shape, idx: usize) -> usize {
        match self {
            DiffAxis::Channel => idx / s.plane(),
            DiffAxis::Row => (idx / s.width) % s.height,
            DiffAxis::Col => idx % s.width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub axis: DiffAxis,
    pub weight: f64,
}

/// `D u = [w₁∂₁u, …, w_d∂_d u]`, stored component-major: the output has
/// `d · shape.len()` entries and component `a` occupies block `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientOperator {
    shape: Shape,
    axes: Vec<AxisSpec>,
}

impl GradientOperator {
    pub fn new(shape: Shape, axes: Vec<AxisSpec>) -> Self {
        Self { shape, axes }
    }

    /// Row and column differences, skipping axes of extent 1.
    pub fn spatial(shape: Shape) -> Self {
        let axes = [DiffAxis::Row, DiffAxis::Col]
            .into_iter()
            .filter(|a| a.extent(shape) > 1)
            .map(|axis| AxisSpec { axis, weight: 1.0 })
            .collect();
        Self { shape, axes }
    }

    /// Spatial differences plus a channel difference scaled by
    /// `channel_weight`, skipping axes of extent 1.
    pub fn with_channel(shape: Shape, channel_weight: f64) -> Self {
        let mut g = Self::spatial(shape);
        if shape.channels > 1 {
            g.axes.insert(
                0,
                AxisSpec {
                    axis: DiffAxis::Channel,
                    weight: channel_weight,
                },
            );
        }
        g
    }

    /// Differences along the single non-trivial axis of a 1-D signal.
    pub fn line(n: usize) -> Self {
        Self::spatial(Shape::line(n))
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn components(&self) -> usize {
        self.axes.len()
    }

    /// Upper bound on `‖D‖²`.
    pub fn norm_sq_bound(&self) -> f64 {
        4.0 * self.axes.iter().map(|a| a.weight * a.weight).sum::<f64>()
    }

    pub fn apply_real(&self, u: &[f64]) -> Vec<f64> {
        let n = self.shape.len();
        let mut out = vec![0.0; n * self.axes.len()];
        for (a, spec) in self.axes.iter().enumerate() {
            let ext = spec.axis.extent(self.shape);
            let stride = spec.axis.stride(self.shape);
            let block = &mut out[a * n..(a + 1) * n];
            for (idx, o) in block.iter_mut().enumerate() {
                if spec.axis.coord(self.shape, idx) + 1 < ext {
                    *o = spec.weight * (u[idx + stride] - u[idx]);
                }
            }
        }
        out
    }

    pub fn adjoint_real(&self, g: &[f64]) -> Vec<f64> {
        let n = self.shape.len();
        let mut out = vec![0.0; n];
        for (a, spec) in self.axes.iter().enumerate() {
            let ext = spec.axis.extent(self.shape);
            let stride = spec.axis.stride(self.shape);
            let block = &g[a * n..(a + 1) * n];
            for (idx, o) in out.iter_mut().enumerate() {
                let c = spec.axis.coord(self.shape, idx);
                let mut v = 0.0;
                if c + 1 < ext {
                    v -= block[idx];
                }
                if c >= 1 {
                    v += block[idx - stride];
                }
                *o += spec.weight * v;
            }
        }
        out
    }
}

impl LinearOperator<f64> for GradientOperator {
    fn domain_len(&self) -> usize {
        self.shape.len()
    }
    fn range_len(&self) -> usize {
        self.shape.len() * self.axes.len()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.apply_real(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.adjoint_real(y)
    }
}

/// Symmetrised gradient `𝓔w = ½(J + Jᵀ)` of a `d`-component field laid
/// out like the output of a [`GradientOperator`].
///
/// Component `a` of `w` lives on the staggered positions where `∂_a` was
/// defined (coordinate `< extent − 1` along axis `a`); entries outside that
/// range are ignored, and a difference of component `a` along axis `b` is
/// taken only where both samples lie in that range. The output stores the
/// full `d × d` tensor per pixel, so the Euclidean norm of a pixel's
/// entries is the Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SymGradOperator {
    grad: GradientOperator,
}

impl SymGradOperator {
    pub fn new(grad: GradientOperator) -> Self {
        Self { grad }
    }

    pub fn components(&self) -> usize {
        let d = self.grad.components();
        d * d
    }

    pub fn field_len(&self) -> usize {
        self.grad.shape.len() * self.grad.components()
    }

    /// Upper bound on `‖𝓔‖²`.
    pub fn norm_sq_bound(&self) -> f64 {
        self.grad.norm_sq_bound()
    }

    #[inline]
    fn in_support(&self, comp: usize, idx: usize) -> bool {
        let spec = self.grad.axes[comp];
        spec.axis.coord(self.grad.shape, idx) + 1 < spec.axis.extent(self.grad.shape)
    }

    /// Weighted difference of component `comp` along axis `b` at `idx`, or
    /// `None` where it is not defined.
    #[inline]
    fn diff_at(&self, w: &[f64], comp: usize, b: usize, idx: usize) -> Option<f64> {
        let s = self.grad.shape;
        let n = s.len();
        let spec = self.grad.axes[b];
        if spec.axis.coord(s, idx) + 1 >= spec.axis.extent(s) {
            return None;
        }
        let next = idx + spec.axis.stride(s);
        if !self.in_support(comp, idx) || !self.in_support(comp, next) {
            return None;
        }
        Some(spec.weight * (w[comp * n + next] - w[comp * n + idx]))
    }

    pub fn apply_real(&self, w: &[f64]) -> Vec<f64> {
        let s = self.grad.shape;
        let n = s.len();
        let d = self.grad.components();
        let mut out = vec![0.0; n * d * d];
        for i in 0..d {
            for j in 0..d {
                let block = &mut out[(i * d + j) * n..(i * d + j + 1) * n];
                for (idx, o) in block.iter_mut().enumerate() {
                    // ½(∂_j w_i + ∂_i w_j)
                    let a = self.diff_at(w, i, j, idx).unwrap_or(0.0);
                    let b = self.diff_at(w, j, i, idx).unwrap_or(0.0);
                    *o = 0.5 * (a + b);
                }
            }
        }
        out
    }

    pub fn adjoint_real(&self, e: &[f64]) -> Vec<f64> {
        let s = self.grad.shape;
        let n = s.len();
        let d = self.grad.components();
        let mut out = vec![0.0; n * d];
        for i in 0..d {
            for j in 0..d {
                let block = &e[(i * d + j) * n..(i * d + j + 1) * n];
                // transpose of the two half-differences
                for (comp, ax) in [(i, j), (j, i)] {
                    let spec = self.grad.axes[ax];
                    let stride = spec.axis.stride(s);
                    for (idx, &v) in block.iter().enumerate() {
                        if v == 0.0 || self.diff_at_defined(comp, ax, idx).is_none() {
                            continue;
                        }
                        let c = 0.5 * spec.weight * v;
                        out[comp * n + idx + stride] += c;
                        out[comp * n + idx] -= c;
                    }
                }
            }
        }
        out
    }

    #[inline]
    fn diff_at_defined(&self, comp: usize, b: usize, idx: usize) -> Option<()> {
        let s = self.grad.shape;
        let spec = self.grad.axes[b];
        if spec.axis.coord(s, idx) + 1 >= spec.axis.extent(s) {
            return None;
        }
        let next = idx + spec.axis.stride(s);
        (self.in_support(comp, idx) && self.in_support(comp, next)).then_some(())
    }
}

impl LinearOperator<f64> for SymGradOperator {
    fn domain_len(&self) -> usize {
        self.field_len()
    }
    fn range_len(&self) -> usize {
        self.grad.shape.len() * self.components()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.apply_real(x)
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.adjoint_real(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::adjoint_check;

    #[test]
    fn line_difference_hand_example() {
        let d = GradientOperator::line(3);
        assert_eq!(d.apply_real(&[0.0, 1.0, 1.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let s = Shape::new(3, 4, 5);
        let d = GradientOperator::with_channel(s, 10.0);
        assert!(d.apply_real(&vec![2.5; s.len()]).iter().all(|&v| v == 0.0));
        let e = SymGradOperator::new(d.clone());
        assert!(e.apply_real(&vec![0.0; e.field_len()]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn affine_ramp_gradient_is_in_symgrad_kernel() {
        let s = Shape::single(6, 7);
        let d = GradientOperator::spatial(s);
        let u: Vec<f64> = (0..s.len())
            .map(|k| 0.3 * (k / 7) as f64 - 1.1 * (k % 7) as f64 + 2.0)
            .collect();
        let e = SymGradOperator::new(d.clone());
        let ew = e.apply_real(&d.apply_real(&u));
        assert!(ew.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn adjoint_checks() {
        for s in [Shape::line(9), Shape::single(5, 4), Shape::new(3, 4, 6)] {
            let d = GradientOperator::with_channel(s, 10.0);
            assert!(adjoint_check(&d, 10, 1e-10, 1).passed);
            let e = SymGradOperator::new(d);
            assert!(adjoint_check(&e, 10, 1e-10, 2).passed);
        }
    }

    #[test]
    fn norm_bounds_hold() {
        let s = Shape::new(2, 6, 5);
        let d = GradientOperator::with_channel(s, 3.0);
        let est = crate::operator::operator_norm_estimate(&d, 200, 0);
        assert!(est * est <= d.norm_sq_bound() + 1e-9);
        let e = SymGradOperator::new(d);
        let est = crate::operator::operator_norm_estimate(&e, 200, 0);
        assert!(est * est <= e.norm_sq_bound() + 1e-9);
    }
}

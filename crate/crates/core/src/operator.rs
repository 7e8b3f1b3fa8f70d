//! The linear-operator contract shared by the gradient, SAR and stacked
//! operators, plus power-iteration norm estimates and dot-product tests.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};

/// Scalar field an operator acts over: `f64` or `Complex64`.
pub trait Field: Copy + Send + Sync + std::fmt::Debug + PartialEq + 'static {
    fn zero() -> Self;
    fn conj(self) -> Self;
    fn abs_sq(self) -> f64;
    fn mul(self, other: Self) -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn random(rng: &mut SeededRng, n: usize) -> Vec<Self>;
    fn is_finite_value(self) -> bool;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn conj(self) -> Self {
        self
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn mul(self, other: Self) -> Self {
        self * other
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn random(rng: &mut SeededRng, n: usize) -> Vec<Self> {
        rng::normal_vec(rng, n)
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn mul(self, other: Self) -> Self {
        self * other
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn random(rng: &mut SeededRng, n: usize) -> Vec<Self> {
        rng::complex_normal_vec(rng, n)
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

/// `⟨x, y⟩ = Σ x̄ᵢ yᵢ`
pub fn inner<T: Field>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (&a, &b)| acc.add(a.conj().mul(b)))
}

pub fn norm<T: Field>(x: &[T]) -> f64 {
    x.iter().map(|v| v.abs_sq()).sum::<f64>().sqrt()
}

/// A linear map with an exact adjoint.
pub trait LinearOperator<T: Field = Complex64>: Send + Sync {
    fn domain_len(&self) -> usize;
    fn range_len(&self) -> usize;
    fn apply(&self, x: &[T]) -> Vec<T>;
    fn adjoint(&self, y: &[T]) -> Vec<T>;

    /// Spectral-norm estimate. The default runs power iteration on every
    /// call; operators used in solver loops cache it.
    fn norm_estimate(&self) -> f64 {
        operator_norm_estimate(self, 100, 0)
    }
}

impl<T: Field, O: LinearOperator<T> + ?Sized> LinearOperator<T> for &O {
    fn domain_len(&self) -> usize {
        (**self).domain_len()
    }
    fn range_len(&self) -> usize {
        (**self).range_len()
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        (**self).apply(x)
    }
    fn adjoint(&self, y: &[T]) -> Vec<T> {
        (**self).adjoint(y)
    }
    fn norm_estimate(&self) -> f64 {
        (**self).norm_estimate()
    }
}

impl<T: Field> LinearOperator<T> for Box<dyn LinearOperator<T>> {
    fn domain_len(&self) -> usize {
        (**self).domain_len()
    }
    fn range_len(&self) -> usize {
        (**self).range_len()
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        (**self).apply(x)
    }
    fn adjoint(&self, y: &[T]) -> Vec<T> {
        (**self).adjoint(y)
    }
    fn norm_estimate(&self) -> f64 {
        (**self).norm_estimate()
    }
}

/// Power iteration on `AᴴA`. Returns 0 for the zero operator.
pub fn operator_norm_estimate<T: Field, A: LinearOperator<T> + ?Sized>(
    op: &A,
    iters: usize,
    seed: u64,
) -> f64 {
    let mut g = rng::seeded(seed);
    let mut x = T::random(&mut g, op.domain_len());
    let nx = norm(&x);
    if nx == 0.0 {
        return 0.0;
    }
    x.iter_mut().for_each(|v| *v = v.scale(1.0 / nx));
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let ax = op.apply(&x);
        let mut y = op.adjoint(&ax);
        let ny = norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        // ‖AᴴAx‖ with ‖x‖ = 1 converges to σ_max²
        est = ny.sqrt();
        y.iter_mut().for_each(|v| *v = v.scale(1.0 / ny));
        x = y;
    }
    est
}

/// Lazily cached norm estimate for operators that own one.
#[derive(Debug, Default)]
pub struct CachedNorm(OnceLock<f64>);

impl CachedNorm {
    pub fn get_or_compute(&self, f: impl FnOnce() -> f64) -> f64 {
        *self.0.get_or_init(f)
    }
}

impl Clone for CachedNorm {
    fn clone(&self) -> Self {
        let c = CachedNorm::default();
        if let Some(&v) = self.0.get() {
            let _ = c.0.set(v);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointReport {
    pub passed: bool,
    pub worst_relative_error: f64,
}

/// Dot-product test: `|⟨Ax, y⟩ − ⟨x, Aᴴy⟩| / (‖Ax‖‖y‖ + ε) ≤ tol` over
/// `trials` random pairs.
pub fn adjoint_check<T: Field, A: LinearOperator<T> + ?Sized>(
    op: &A,
    trials: usize,
    tol: f64,
    seed: u64,
) -> AdjointReport {
    let mut g = rng::seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials.max(1) {
        let x = T::random(&mut g, op.domain_len());
        let y = T::random(&mut g, op.range_len());
        let ax = op.apply(&x);
        let ahy = op.adjoint(&y);
        let lhs = inner(&ax, &y);
        let rhs = inner(&x, &ahy);
        let diff = lhs.add(rhs.scale(-1.0)).abs_sq().sqrt();
        let rel = diff / (norm(&ax) * norm(&y) + f64::EPSILON);
        worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
    }
    AdjointReport {
        passed: worst <= tol,
        worst_relative_error: worst,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity {
    pub len: usize,
}

impl<T: Field> LinearOperator<T> for Identity {
    fn domain_len(&self) -> usize {
        self.len
    }
    fn range_len(&self) -> usize {
        self.len
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        x.to_vec()
    }
    fn adjoint(&self, y: &[T]) -> Vec<T> {
        y.to_vec()
    }
    fn norm_estimate(&self) -> f64 {
        1.0
    }
}

/// Elementwise real scaling `x ↦ diag(d) x`.
#[derive(Debug, Clone)]
pub struct Diagonal {
    pub diag: Vec<f64>,
}

impl<T: Field> LinearOperator<T> for Diagonal {
    fn domain_len(&self) -> usize {
        self.diag.len()
    }
    fn range_len(&self) -> usize {
        self.diag.len()
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.diag).map(|(v, &d)| v.scale(d)).collect()
    }
    fn adjoint(&self, y: &[T]) -> Vec<T> {
        self.apply(y)
    }
}

/// Dense real matrix, row-major, acting on either field.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data length {} is not {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Self::new(rows.len(), cols, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 1.0);
        Self { rows: n, cols: n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul_t_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y) {
            out.iter_mut().zip(row).for_each(|(o, a)| *o += a * yi);
        }
        out
    }
}

impl<T: Field> LinearOperator<T> for DenseMatrix {
    fn domain_len(&self) -> usize {
        self.cols
    }
    fn range_len(&self) -> usize {
        self.rows
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &v)| acc.add(v.scale(a)))
            })
            .collect()
    }
    fn adjoint(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y) {
            out.iter_mut()
                .zip(row)
                .for_each(|(o, &a)| *o = o.add(yi.scale(a)));
        }
        out
    }
}

/// Block-diagonal stack `diag(A₁, …, A_K)` acting on concatenated channels.
pub struct MultiChannel<T: Field = Complex64> {
    members: Vec<Box<dyn LinearOperator<T>>>,
    domain_offsets: Vec<usize>,
    range_offsets: Vec<usize>,
}

impl<T: Field> MultiChannel<T> {
    pub fn new(members: Vec<Box<dyn LinearOperator<T>>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("multi-channel operator needs at least one member"));
        }
        let offsets = |f: &dyn Fn(&dyn LinearOperator<T>) -> usize| {
            let mut v = vec![0];
            for m in &members {
                v.push(v.last().unwrap() + f(m.as_ref()));
            }
            v
        };
        let domain_offsets = offsets(&|m| m.domain_len());
        let range_offsets = offsets(&|m| m.range_len());
        Ok(Self {
            members,
            domain_offsets,
            range_offsets,
        })
    }

    pub fn members(&self) -> &[Box<dyn LinearOperator<T>>] {
        &self.members
    }

    pub fn check_shapes(&self, x_len: usize) -> Result<()> {
        if x_len != self.domain_len() {
            return Err(Error::invalid(format!(
                "stacked input length {x_len} does not match domain {}",
                self.domain_len()
            )));
        }
        Ok(())
    }

    pub fn range_slice<'a>(&self, y: &'a [T], k: usize) -> &'a [T] {
        &y[self.range_offsets[k]..self.range_offsets[k + 1]]
    }
}

impl<T: Field> LinearOperator<T> for MultiChannel<T> {
    fn domain_len(&self) -> usize {
        *self.domain_offsets.last().unwrap()
    }
    fn range_len(&self) -> usize {
        *self.range_offsets.last().unwrap()
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.range_len());
        for (k, m) in self.members.iter().enumerate() {
            out.extend(m.apply(&x[self.domain_offsets[k]..self.domain_offsets[k + 1]]));
        }
        out
    }
    fn adjoint(&self, y: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.domain_len());
        for (k, m) in self.members.iter().enumerate() {
            out.extend(m.adjoint(self.range_slice(y, k)));
        }
        out
    }
    fn norm_estimate(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.norm_estimate())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Mismatched;
    impl LinearOperator<f64> for Mismatched {
        fn domain_len(&self) -> usize {
            4
        }
        fn range_len(&self) -> usize {
            4
        }
        fn apply(&self, x: &[f64]) -> Vec<f64> {
            x.iter().map(|v| 2.0 * v).collect()
        }
        fn adjoint(&self, y: &[f64]) -> Vec<f64> {
            y.to_vec()
        }
    }

    /// Largest singular value via cyclic Jacobi on AᵀA.
    fn jacobi_sigma_max(a: &DenseMatrix) -> f64 {
        let n = a.cols;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..a.rows).map(|k| a.get(k, i) * a.get(k, j)).sum();
            }
        }
        for _ in 0..100 {
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[k * n + p];
                        let mkq = m[k * n + q];
                        m[k * n + p] = c * mkp - s * mkq;
                        m[k * n + q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p * n + k];
                        let mqk = m[q * n + k];
                        m[p * n + k] = c * mpk - s * mqk;
                        m[q * n + k] = s * mpk + c * mqk;
                    }
                }
            }
        }
        (0..n).map(|i| m[i * n + i]).fold(0.0, f64::max).sqrt()
    }

    #[test]
    fn norm_of_identity_and_scaling() {
        let id = Identity { len: 5 };
        assert!((LinearOperator::<f64>::norm_estimate(&id) - 1.0).abs() < 1e-6);
        assert!((operator_norm_estimate::<f64, _>(&id, 10, 3) - 1.0).abs() < 1e-6);
        let d = Diagonal { diag: vec![2.0; 5] };
        assert!((operator_norm_estimate::<f64, _>(&d, 10, 3) - 2.0).abs() < 1e-6);
        let z = Diagonal { diag: vec![0.0; 3] };
        assert_eq!(operator_norm_estimate::<f64, _>(&z, 10, 3), 0.0);
    }

    #[test]
    fn norm_matches_jacobi_svd() {
        let mut g = rng::seeded(11);
        let a = DenseMatrix::new(4, 3, rng::normal_vec(&mut g, 12)).unwrap();
        let oracle = jacobi_sigma_max(&a);
        let est = operator_norm_estimate::<f64, _>(&a, 500, 1);
        assert!((est - oracle).abs() < 1e-4, "{est} vs {oracle}");
        assert_eq!(est, operator_norm_estimate::<f64, _>(&a, 500, 1));
    }

    #[test]
    fn adjoint_check_detects_mismatch() {
        let r = adjoint_check::<f64, _>(&Identity { len: 6 }, 5, 1e-12, 0);
        assert!(r.passed);
        assert_eq!(r.worst_relative_error, 0.0);
        let r = adjoint_check(&Mismatched, 5, 1e-10, 0);
        assert!(!r.passed);
    }

    #[test]
    fn dense_complex_adjoint() {
        let mut g = rng::seeded(2);
        let a = DenseMatrix::new(5, 3, rng::normal_vec(&mut g, 15)).unwrap();
        assert!(adjoint_check::<Complex64, _>(&a, 10, 1e-12, 4).passed);
    }

    #[test]
    fn multichannel_behaviour() {
        let single = MultiChannel::<f64>::new(vec![Box::new(Diagonal { diag: vec![1.0, 3.0] })]).unwrap();
        assert_eq!(single.apply(&[1.0, 1.0]), vec![1.0, 3.0]);
        let two = MultiChannel::<f64>::new(vec![
            Box::new(Identity { len: 2 }),
            Box::new(Identity { len: 3 }),
        ])
        .unwrap();
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(two.apply(&x), x.to_vec());
        assert_eq!(two.adjoint(&x), x.to_vec());
        assert!(adjoint_check(&two, 5, 1e-12, 1).passed);
        assert!(MultiChannel::<f64>::new(vec![]).is_err());
        let mixed = MultiChannel::<f64>::new(vec![
            Box::new(Diagonal { diag: vec![2.0, 1.0] }),
            Box::new(Diagonal { diag: vec![0.5, 3.0] }),
        ])
        .unwrap();
        assert!((mixed.norm_estimate() - 3.0).abs() < 1e-6);
    }
}

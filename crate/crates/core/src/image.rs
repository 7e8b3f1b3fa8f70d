//! Complex image containers and the magnitude/phase split `z = r ∘ Φ`.
//!
//! Images are stored channel-major and row-major within a channel. That
//! flattening order is shared by every operator in the crate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub const fn single(height: usize, width: usize) -> Self {
        Self::new(1, height, width)
    }

    /// A 1-D signal laid out as one row.
    pub const fn line(n: usize) -> Self {
        Self::new(1, 1, n)
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub const fn index(&self, c: usize, i: usize, j: usize) -> usize {
        (c * self.height + i) * self.width + j
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    shape: Shape,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(shape: Shape, data: Vec<Complex64>) -> Result<Self> {
        if shape.channels == 0 {
            return Err(Error::invalid("image needs at least one channel"));
        }
        if data.len() != shape.len() {
            return Err(Error::invalid(format!(
                "data length {} does not match shape {shape}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); shape.len()],
        }
    }

    pub fn from_real(shape: Shape, values: &[f64]) -> Result<Self> {
        Self::new(
            shape,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn channel(&self, c: usize) -> &[Complex64] {
        let p = self.shape.plane();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }
}

/// Magnitude/phase decomposition of a complex image.
#[derive(Debug, Clone, PartialEq)]
pub struct MagPhase {
    shape: Shape,
    magnitude: Vec<f64>,
    phase: Vec<Complex64>,
}

impl MagPhase {
    pub fn new(shape: Shape, magnitude: Vec<f64>, phase: Vec<Complex64>) -> Result<Self> {
        if magnitude.len() != shape.len() || phase.len() != shape.len() {
            return Err(Error::invalid(format!(
                "magnitude/phase lengths {}/{} do not match shape {shape}",
                magnitude.len(),
                phase.len()
            )));
        }
        if let Some(i) = magnitude.iter().position(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::invalid(format!(
                "magnitude at index {i} is negative or non-finite"
            )));
        }
        if let Some(i) = phase.iter().position(|p| (p.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::invalid(format!("phase at index {i} is not unit modulus")));
        }
        Ok(Self {
            shape,
            magnitude,
            phase,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn phase(&self) -> &[Complex64] {
        &self.phase
    }

    /// Reattaches the stored phase to new magnitudes, `x ∘ Φ`.
    pub fn with_magnitude(&self, magnitude: &[f64]) -> Vec<Complex64> {
        magnitude
            .iter()
            .zip(&self.phase)
            .map(|(&x, &p)| p * x)
            .collect()
    }
}

/// Splits `z` into `r = |z|` and `Φ = z/|z|`, with `Φ = 1` where `z = 0`.
pub fn decompose(z: &ComplexImage) -> Result<MagPhase> {
    let (magnitude, phase) = split_slice(z.data())?;
    Ok(MagPhase {
        shape: z.shape(),
        magnitude,
        phase,
    })
}

pub(crate) fn split_slice(z: &[Complex64]) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut magnitude = Vec::with_capacity(z.len());
    let mut phase = Vec::with_capacity(z.len());
    for (i, &v) in z.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        let r = v.norm();
        magnitude.push(r);
        phase.push(if r > 0.0 {
            // normalise through the polar angle so |Φ| = 1 to rounding
            Complex64::from_polar(1.0, v.arg())
        } else {
            Complex64::new(1.0, 0.0)
        });
    }
    Ok((magnitude, phase))
}

pub fn recompose(m: &MagPhase) -> ComplexImage {
    ComplexImage {
        shape: m.shape,
        data: m.with_magnitude(&m.magnitude),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decompose_axis_aligned() {
        let z = ComplexImage::new(Shape::line(2), vec![c(0.0, 3.0), c(-2.0, 0.0)]).unwrap();
        let m = decompose(&z).unwrap();
        assert_eq!(m.magnitude(), &[3.0, 2.0]);
        assert!((m.phase()[0] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((m.phase()[1] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_has_unit_phase() {
        let z = ComplexImage::new(Shape::line(1), vec![c(0.0, 0.0)]).unwrap();
        let m = decompose(&z).unwrap();
        assert_eq!(m.magnitude(), &[0.0]);
        assert_eq!(m.phase(), &[c(1.0, 0.0)]);
        let z = ComplexImage::new(Shape::line(1), vec![c(1.0, 0.0)]).unwrap();
        let m = decompose(&z).unwrap();
        assert_eq!((m.magnitude()[0], m.phase()[0]), (1.0, c(1.0, 0.0)));
    }

    #[test]
    fn recompose_simple() {
        let m = MagPhase::new(Shape::line(2), vec![1.0, 2.0], vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(recompose(&m).data(), &[c(1.0, 0.0), c(0.0, 2.0)]);
    }

    #[test]
    fn round_trip_random_images() {
        let mut g = rng::seeded(7);
        for _ in 0..100 {
            let data = rng::complex_normal_vec(&mut g, 24);
            let z = ComplexImage::new(Shape::new(2, 3, 4), data).unwrap();
            let m = decompose(&z).unwrap();
            for p in m.phase() {
                assert!((p.norm() - 1.0).abs() < 1e-12);
            }
            let back = recompose(&m);
            for (a, b) in back.data().iter().zip(z.data()) {
                assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ComplexImage::new(Shape::line(2), vec![c(1.0, 0.0)]).is_err());
        assert!(ComplexImage::new(Shape::line(1), vec![c(f64::NAN, 0.0)]).is_err());
        assert!(MagPhase::new(Shape::line(1), vec![1.0], vec![c(2.0, 0.0)]).is_err());
        assert!(MagPhase::new(Shape::line(1), vec![-1.0], vec![c(1.0, 0.0)]).is_err());
        assert!(MagPhase::new(Shape::line(2), vec![1.0], vec![c(1.0, 0.0)]).is_err());
    }
}

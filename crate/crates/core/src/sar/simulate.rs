//! Synthetic piecewise-constant scenes with random phase.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::freq::FreqOperator;
use super::geometry::SceneGrid;
use super::{PhaseHistory, Scene};
use crate::error::{Error, Result};
use crate::image::{ComplexImage, Shape};
use crate::operator::LinearOperator;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhantomShape {
    /// Pixels with `row0 ≤ row < row0 + rows`, `col0 ≤ col < col0 + cols`.
    Rect {
        row0: usize,
        col0: usize,
        rows: usize,
        cols: usize,
        level: f64,
    },
    /// Pixels within `radius` of the (fractional) center.
    Disk {
        row: f64,
        col: f64,
        radius: f64,
        level: f64,
    },
}

/// Magnitude phantom: background level, then shapes painted in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub height: usize,
    pub width: usize,
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub shapes: Vec<PhantomShape>,
}

impl PhantomSpec {
    pub fn zero(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            background: 0.0,
            shapes: Vec::new(),
        }
    }

    /// Dim background with a bright block, a mid-level disk and a small
    /// bright disk, scaled to the grid size.
    pub fn blocks(height: usize, width: usize) -> Self {
        let (h, w) = (height as f64, width as f64);
        Self {
            height,
            width,
            background: 0.25,
            shapes: vec![
                PhantomShape::Rect {
                    row0: height / 8,
                    col0: width / 8,
                    rows: height * 3 / 8,
                    cols: width * 5 / 16,
                    level: 1.0,
                },
                PhantomShape::Disk {
                    row: 0.65 * h,
                    col: 0.6 * w,
                    radius: 0.2 * h.min(w),
                    level: 0.5,
                },
                PhantomShape::Disk {
                    row: 0.3 * h,
                    col: 0.75 * w,
                    radius: 0.08 * h.min(w),
                    level: 0.8,
                },
            ],
        }
    }

    pub fn render(&self) -> Result<Vec<f64>> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::invalid("phantom must be non-empty"));
        }
        let mut m = vec![self.background; self.height * self.width];
        for s in &self.shapes {
            for r in 0..self.height {
                for c in 0..self.width {
                    let (inside, level) = match *s {
                        PhantomShape::Rect {
                            row0,
                            col0,
                            rows,
                            cols,
                            level,
                        } => (
                            r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols,
                            level,
                        ),
                        PhantomShape::Disk {
                            row,
                            col,
                            radius,
                            level,
                        } => (
                            (r as f64 - row).powi(2) + (c as f64 - col).powi(2) <= radius * radius,
                            level,
                        ),
                    };
                    if inside {
                        m[r * self.width + c] = level;
                    }
                }
            }
        }
        if m.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("phantom levels must be finite and nonnegative"));
        }
        Ok(m)
    }
}

/// Noise level giving the requested data SNR: `σ² = ‖Av‖² / (N·10^{snr/10})`.
pub fn noise_sigma_for_snr(clean: &[Complex64], snr_db: f64) -> f64 {
    if clean.is_empty() {
        return 0.0;
    }
    let p: f64 = clean.iter().map(|v| v.norm_sqr()).sum::<f64>() / clean.len() as f64;
    (p / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Builds the phantom with i.i.d. uniform phase and returns it with
/// `d = Av + n`, `n` circular Gaussian with `E|nᵢ|² = σ²`.
pub fn simulate_scene(
    op: &FreqOperator,
    phantom: &PhantomSpec,
    sigma: f64,
    seed: u64,
) -> Result<(Scene, PhaseHistory)> {
    let grid: SceneGrid = *op.grid();
    if phantom.height != grid.height || phantom.width != grid.width {
        return Err(Error::invalid("phantom size does not match the scene grid"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("noise sigma must be nonnegative"));
    }
    let mags = phantom.render()?;
    let mut g = rng::seeded(seed);
    let v: Vec<Complex64> = mags.iter().map(|&m| rng::uniform_phase(&mut g) * m).collect();
    let mut d = op.apply(&v);
    if sigma > 0.0 {
        let noise = rng::complex_normal_vec(&mut g, d.len());
        d.iter_mut().zip(&noise).for_each(|(a, b)| *a += b * sigma);
    }
    let scene = Scene {
        grid,
        reflectivity: ComplexImage::new(Shape::single(grid.height, grid.width), v)?,
    };
    let history = PhaseHistory::new(op.geometry().pulses(), op.geometry().frequencies(), d)?;
    Ok((scene, history))
}

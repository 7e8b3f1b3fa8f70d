//! Collection geometry and the imaged pixel grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Pulse positions, sampled angular frequencies and the scene reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SarGeometry {
    /// Transmitter position per pulse, meters.
    pub tx: Vec<Point>,
    /// Receiver position per pulse, meters.
    pub rx: Vec<Point>,
    /// Angular frequencies, rad/s.
    pub omegas: Vec<f64>,
    pub x_ref: Point,
    pub wave_speed: f64,
    /// Complex amplitude per frequency as `[re, im]`; flat when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<Vec<[f64; 2]>>,
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl SarGeometry {
    pub fn new(tx: Vec<Point>, rx: Vec<Point>, omegas: Vec<f64>, x_ref: Point, wave_speed: f64) -> Result<Self> {
        let g = Self {
            tx,
            rx,
            omegas,
            x_ref,
            wave_speed,
            amplitude: None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Co-located transmitter and receiver.
    pub fn monostatic(positions: Vec<Point>, omegas: Vec<f64>, x_ref: Point, wave_speed: f64) -> Result<Self> {
        Self::new(positions.clone(), positions, omegas, x_ref, wave_speed)
    }

    pub fn with_amplitude(mut self, amplitude: Vec<Complex64>) -> Result<Self> {
        if amplitude.len() != self.omegas.len() {
            return Err(Error::invalid("one amplitude per frequency required"));
        }
        self.amplitude = Some(amplitude.iter().map(|a| [a.re, a.im]).collect());
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx.is_empty() || self.omegas.is_empty() {
            return Err(Error::invalid("geometry needs at least one pulse and one frequency"));
        }
        if self.tx.len() != self.rx.len() {
            return Err(Error::invalid("transmitter and receiver tracks differ in length"));
        }
        if !(self.wave_speed > 0.0 && self.wave_speed.is_finite()) {
            return Err(Error::invalid("wave speed must be positive"));
        }
        let finite = |p: &Point| p.iter().all(|v| v.is_finite());
        if !self.tx.iter().chain(&self.rx).all(finite) || !finite(&self.x_ref) {
            return Err(Error::invalid("positions must be finite"));
        }
        if !self.omegas.iter().all(|w| w.is_finite()) {
            return Err(Error::invalid("frequencies must be finite"));
        }
        if let Some(a) = &self.amplitude {
            if a.len() != self.omegas.len() || !a.iter().flatten().all(|v| v.is_finite()) {
                return Err(Error::invalid("amplitude must be finite with one entry per frequency"));
            }
        }
        Ok(())
    }

    pub fn pulses(&self) -> usize {
        self.tx.len()
    }

    pub fn frequencies(&self) -> usize {
        self.omegas.len()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        match &self.amplitude {
            Some(a) => a.iter().map(|v| Complex64::new(v[0], v[1])).collect(),
            None => vec![Complex64::new(1.0, 0.0); self.omegas.len()],
        }
    }

    /// `(R_T + R_R) − (R_T,ref + R_R,ref)` for pulse `j` and a point.
    #[inline]
    pub fn differential_range(&self, j: usize, p: &Point) -> f64 {
        dist(&self.tx[j], p) + dist(&self.rx[j], p) - dist(&self.tx[j], &self.x_ref) - dist(&self.rx[j], &self.x_ref)
    }

    /// `(ω₀, Δω)` when the frequencies are uniformly spaced.
    pub fn uniform_spacing(&self) -> Option<(f64, f64)> {
        let m = self.omegas.len();
        let w0 = self.omegas[0];
        if m == 1 {
            return Some((w0, 0.0));
        }
        let dw = (self.omegas[m - 1] - w0) / (m - 1) as f64;
        let scale = self.omegas.iter().fold(0.0f64, |a, w| a.max(w.abs()));
        let ok = self
            .omegas
            .iter()
            .enumerate()
            .all(|(k, w)| (w - (w0 + k as f64 * dw)).abs() <= 1e-12 * scale);
        (ok && dw != 0.0).then_some((w0, dw))
    }
}

/// Flat scene grid at height 0: pixel `(row, col)` sits at
/// `origin + (col·spacing, row·spacing, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneGrid {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub height: usize,
    pub width: usize,
}

impl SceneGrid {
    pub fn new(origin: [f64; 2], spacing: f64, height: usize, width: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("pixel spacing must be positive"));
        }
        if height == 0 || width == 0 {
            return Err(Error::invalid("scene grid must be non-empty"));
        }
        Ok(Self {
            origin,
            spacing,
            height,
            width,
        })
    }

    /// Grid whose central sample lies at `center` (exactly, for odd sizes).
    pub fn centered(center: Point, spacing: f64, height: usize, width: usize) -> Result<Self> {
        let ox = center[0] - spacing * (width as f64 - 1.0) / 2.0;
        let oy = center[1] - spacing * (height as f64 - 1.0) / 2.0;
        Self::new([ox, oy], spacing, height, width)
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, idx: usize) -> Point {
        let (r, c) = (idx / self.width, idx % self.width);
        [
            self.origin[0] + c as f64 * self.spacing,
            self.origin[1] + r as f64 * self.spacing,
            0.0,
        ]
    }

    /// Pixel index nearest to a ground point, if it lies on the grid.
    pub fn nearest(&self, p: Point) -> Option<usize> {
        let c = ((p[0] - self.origin[0]) / self.spacing).round();
        let r = ((p[1] - self.origin[1]) / self.spacing).round();
        (c >= 0.0 && r >= 0.0 && (c as usize) < self.width && (r as usize) < self.height)
            .then(|| r as usize * self.width + c as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trajectory {
    /// Straight track perpendicular to the look direction.
    Linear,
    /// Arc of constant radius about the scene reference.
    Circular,
}

/// Parameters for the built-in geometry generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub trajectory: Trajectory,
    pub pulses: usize,
    pub frequencies: usize,
    /// Hz.
    pub center_frequency: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Horizontal stand-off from the scene reference, meters.
    pub range: f64,
    /// Platform height, meters.
    pub altitude: f64,
    /// Angular extent of the aperture seen from the scene reference, rad.
    pub aperture: f64,
    /// Azimuth of the aperture center, rad.
    pub look_angle: f64,
    pub wave_speed: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            trajectory: Trajectory::Circular,
            pulses: 32,
            frequencies: 64,
            center_frequency: 9.6e9,
            bandwidth: 6.0e8,
            range: 1000.0,
            altitude: 100.0,
            aperture: 0.03,
            look_angle: -PI / 2.0,
            wave_speed: SPEED_OF_LIGHT,
        }
    }
}

impl GeometrySpec {
    /// Frequencies `f_c + (k − m/2)·B/m`, so the band center is sample `m/2`.
    pub fn omegas(&self) -> Vec<f64> {
        let m = self.frequencies as f64;
        (0..self.frequencies)
            .map(|k| 2.0 * PI * (self.center_frequency + (k as f64 - m / 2.0) * self.bandwidth / m))
            .collect()
    }

    pub fn build(&self, x_ref: Point) -> Result<SarGeometry> {
        if self.pulses == 0 || self.frequencies == 0 {
            return Err(Error::invalid("pulses and frequencies must be positive"));
        }
        if !(self.range > 0.0 && self.bandwidth >= 0.0 && self.center_frequency > 0.0) {
            return Err(Error::invalid("range and center frequency must be positive"));
        }
        let n = self.pulses;
        let frac = |j: usize| {
            if n == 1 {
                0.0
            } else {
                j as f64 / (n - 1) as f64 - 0.5
            }
        };
        let (cx, cy) = (self.look_angle.cos(), self.look_angle.sin());
        let positions: Vec<Point> = (0..n)
            .map(|j| match self.trajectory {
                Trajectory::Circular => {
                    let a = self.look_angle + frac(j) * self.aperture;
                    [
                        x_ref[0] + self.range * a.cos(),
                        x_ref[1] + self.range * a.sin(),
                        self.altitude,
                    ]
                }
                Trajectory::Linear => {
                    let half = self.range * (self.aperture / 2.0).tan();
                    let s = 2.0 * half * frac(j);
                    [
                        x_ref[0] + self.range * cx - s * cy,
                        x_ref[1] + self.range * cy + s * cx,
                        self.altitude,
                    ]
                }
            })
            .collect();
        SarGeometry::monostatic(positions, self.omegas(), x_ref, self.wave_speed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_respect_shape_and_reference() {
        for trajectory in [Trajectory::Linear, Trajectory::Circular] {
            let spec = GeometrySpec {
                trajectory,
                ..Default::default()
            };
            let g = spec.build([1.0, 2.0, 0.0]).unwrap();
            assert_eq!((g.pulses(), g.frequencies()), (32, 64));
            for j in 0..g.pulses() {
                assert_eq!(g.differential_range(j, &[1.0, 2.0, 0.0]), 0.0);
            }
            let (_, dw) = g.uniform_spacing().unwrap();
            assert!((dw - 2.0 * PI * 6.0e8 / 64.0).abs() < 1e-3);
            assert!((g.omegas[32] - 2.0 * PI * 9.6e9).abs() < 1e-3);
        }
    }

    #[test]
    fn circular_track_keeps_constant_ground_range() {
        let g = GeometrySpec::default().build([0.0; 3]).unwrap();
        for p in &g.tx {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1000.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_positions_round_trip() {
        let grid = SceneGrid::centered([0.0; 3], 0.25, 5, 7).unwrap();
        assert_eq!(grid.position(2 * 7 + 3), [0.0, 0.0, 0.0]);
        for i in 0..grid.len() {
            assert_eq!(grid.nearest(grid.position(i)), Some(i));
        }
        assert!(SceneGrid::new([0.0; 2], 0.0, 2, 2).is_err());
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(SarGeometry::monostatic(vec![], vec![1.0], [0.0; 3], 1.0).is_err());
        assert!(SarGeometry::monostatic(vec![[0.0; 3]], vec![1.0], [0.0; 3], -1.0).is_err());
        assert!(SarGeometry::new(vec![[0.0; 3]], vec![], vec![1.0], [0.0; 3], 1.0).is_err());
        let json = r#"{"tx":[[0,0,0]],"rx":[[0,0,0]],"omegas":[1],"x_ref":[0,0,0],"wave_speed":1,"extra":1}"#;
        assert!(serde_json::from_str::<SarGeometry>(json).is_err());
    }
}

//! Point-scatterer SAR data model: exact frequency-domain operator, the
//! binned time-domain pair, synthetic scenes and file formats.

mod freq;
mod geometry;
mod simulate;
mod time;

pub use freq::FreqOperator;
pub use geometry::{GeometrySpec, Point, SarGeometry, SceneGrid, Trajectory, SPEED_OF_LIGHT};
pub use simulate::{noise_sigma_for_snr, simulate_scene, PhantomShape, PhantomSpec};
pub use time::TimeOperator;

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cimg;
use crate::error::{Error, Result};
use crate::image::{ComplexImage, Shape};
use crate::operator::{LinearOperator, MultiChannel};

/// Ground-truth reflectivity on its grid.
#[derive(Debug, Clone)]
pub struct Scene {
    pub grid: SceneGrid,
    pub reflectivity: ComplexImage,
}

/// Measurements `d(j, k)`, `n` pulses × `m` frequencies, pulse-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHistory {
    pulses: usize,
    frequencies: usize,
    data: Vec<Complex64>,
}

impl PhaseHistory {
    pub fn new(pulses: usize, frequencies: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != pulses * frequencies {
            return Err(Error::invalid(format!(
                "phase history of {pulses}x{frequencies} needs {} samples, got {}",
                pulses * frequencies,
                data.len()
            )));
        }
        Ok(Self {
            pulses,
            frequencies,
            data,
        })
    }

    pub fn pulses(&self) -> usize {
        self.pulses
    }

    pub fn frequencies(&self) -> usize {
        self.frequencies
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// As a CIMG image with `K = pulses`, `H = 1`, `W = frequencies`.
    pub fn to_image(&self) -> Result<ComplexImage> {
        ComplexImage::new(Shape::new(self.pulses, 1, self.frequencies), self.data.clone())
    }

    pub fn from_image(img: &ComplexImage) -> Result<Self> {
        let s = img.shape();
        if s.height != 1 {
            return Err(Error::invalid(format!("phase history must have H = 1, got shape {s}")));
        }
        Self::new(s.channels, s.width, img.data().to_vec())
    }
}

/// Geometry sidecar written next to each phase-history file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub geometry: SarGeometry,
    pub grid: SceneGrid,
}

pub fn phase_history_path(dir: &Path, channel: usize) -> PathBuf {
    dir.join(format!("phase_history_c{channel}.cimg"))
}

pub fn geometry_path(dir: &Path, channel: usize) -> PathBuf {
    dir.join(format!("geometry_c{channel}.json"))
}

pub fn write_channel(dir: &Path, channel: usize, history: &PhaseHistory, geom: &GeometryFile) -> Result<()> {
    cimg::write(&phase_history_path(dir, channel), &history.to_image()?)?;
    let path = geometry_path(dir, channel);
    let mut json = serde_json::to_string_pretty(geom).map_err(|e| Error::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn read_channel(dir: &Path, channel: usize) -> Result<(PhaseHistory, GeometryFile)> {
    let history = PhaseHistory::from_image(&cimg::read(&phase_history_path(dir, channel))?)?;
    let path = geometry_path(dir, channel);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let geom: GeometryFile = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    geom.geometry.validate()?;
    if history.pulses != geom.geometry.pulses() || history.frequencies != geom.geometry.frequencies() {
        return Err(Error::Format {
            path,
            message: "geometry does not match the phase-history shape".into(),
        });
    }
    Ok((history, geom))
}

/// Block-diagonal stack of per-channel operators.
pub fn multi_channel_operator(
    ops: Vec<Box<dyn LinearOperator<Complex64>>>,
) -> Result<MultiChannel<Complex64>> {
    MultiChannel::new(ops)
}

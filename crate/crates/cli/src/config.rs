//! Experiment configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use proxmag::regularizers::RegularizerSpec;
use proxmag::sar::{GeometrySpec, PhantomShape, PhantomSpec, SceneGrid};
use proxmag::solvers::SolverConfig;
use proxmag::Shape;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub scene: SceneConfig,
    pub geometry: GeometrySpec,
    pub operator: OperatorConfig,
    pub regularizer: RegularizerSpec,
    pub solver: SolverConfig,
    pub render: RenderConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            scene: SceneConfig::default(),
            geometry: GeometrySpec::default(),
            operator: OperatorConfig::default(),
            regularizer: RegularizerSpec::new("tv-iso", 0.1),
            solver: SolverConfig::default(),
            render: RenderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Phantom {
    /// Bright block and disks on a dim background.
    Blocks {},
    /// All-zero reflectivity.
    Zero {},
    Custom {
        #[serde(default)]
        background: f64,
        #[serde(default)]
        shapes: Vec<PhantomShape>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub phantom: Phantom,
    pub height: usize,
    pub width: usize,
    /// Pixel spacing, meters.
    pub spacing: f64,
    /// Each channel is a separate aperture of the same scene with its own
    /// random phase; channel `k` is centred at `look_angle + k·aperture`.
    pub channels: usize,
    /// Data SNR in dB; ignored when `noise_sigma` is set.
    pub snr_db: Option<f64>,
    pub noise_sigma: Option<f64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            phantom: Phantom::Blocks {},
            height: 64,
            width: 64,
            spacing: 0.25,
            channels: 1,
            snr_db: Some(10.0),
            noise_sigma: None,
        }
    }
}

impl SceneConfig {
    pub fn phantom_spec(&self) -> PhantomSpec {
        match &self.phantom {
            Phantom::Blocks {} => PhantomSpec::blocks(self.height, self.width),
            Phantom::Zero {} => PhantomSpec::zero(self.height, self.width),
            Phantom::Custom { background, shapes } => PhantomSpec {
                height: self.height,
                width: self.width,
                background: *background,
                shapes: shapes.clone(),
            },
        }
    }

    pub fn grid(&self) -> Result<SceneGrid, CliError> {
        SceneGrid::centered([0.0; 3], self.spacing, self.height, self.width).map_err(CliError::usage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Freq,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorKind,
    /// FFT oversampling of the time-domain model; a power of two.
    pub upsample: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            kind: OperatorKind::Freq,
            upsample: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    /// dB range relative to the peak mapped onto black..white.
    pub db_window: [f64; 2],
}

impl Default for RenderConfig {
    fn default() -> Self {
        let (lo, hi) = proxmag::export::DEFAULT_DB_WINDOW;
        Self { db_window: [lo, hi] }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub size: Option<usize>,
    pub channels: Option<usize>,
    pub snr_db: Option<f64>,
    pub regularizer: Option<String>,
    pub lambda: Option<f64>,
    pub iterations: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = o.size {
            self.scene.height = v;
            self.scene.width = v;
        }
        if let Some(v) = o.channels {
            self.scene.channels = v;
        }
        if let Some(v) = o.snr_db {
            self.scene.snr_db = Some(v);
            self.scene.noise_sigma = None;
        }
        if let Some(v) = &o.regularizer {
            if *v != self.regularizer.name {
                self.regularizer = RegularizerSpec::new(v, self.regularizer.lambda);
            }
        }
        if let Some(v) = o.lambda {
            self.regularizer.lambda = v;
        }
        if let Some(v) = o.iterations {
            self.solver.max_iters = v;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.scene;
        if s.height == 0 || s.width == 0 {
            return Err(CliError::usage("scene size must be positive"));
        }
        if s.channels == 0 {
            return Err(CliError::usage("scene.channels must be at least 1"));
        }
        if !(s.spacing > 0.0 && s.spacing.is_finite()) {
            return Err(CliError::usage("scene.spacing must be positive"));
        }
        if let Some(sigma) = s.noise_sigma {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(CliError::usage("scene.noise_sigma must be nonnegative"));
            }
        }
        if let Some(snr) = s.snr_db {
            if !snr.is_finite() {
                return Err(CliError::usage("scene.snr_db must be finite"));
            }
        }
        let [lo, hi] = self.render.db_window;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(CliError::usage("render.db_window must be increasing"));
        }
        if self.operator.kind == OperatorKind::Time && !self.operator.upsample.is_power_of_two() {
            return Err(CliError::usage("operator.upsample must be a power of two"));
        }
        self.solver.validate().map_err(CliError::usage)?;
        s.phantom_spec().render().map_err(CliError::usage)?;
        s.grid()?;
        self.geometry.build([0.0; 3]).map_err(CliError::usage)?;
        let shape = Shape::new(s.channels, s.height, s.width);
        proxmag::regularizers::build(&self.regularizer, shape).map_err(CliError::usage)?;
        Ok(())
    }

    /// Geometry of channel `k`.
    pub fn channel_geometry(&self, k: usize) -> GeometrySpec {
        GeometrySpec {
            look_angle: self.geometry.look_angle + k as f64 * self.geometry.aperture,
            ..self.geometry.clone()
        }
    }
}

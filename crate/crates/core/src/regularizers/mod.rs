//! Regularizers usable as `H` in the magnitude lift, plus a name registry.

mod diff;
mod indicator;
mod multibang;
mod norms;
mod tgv;
mod tikhonov;
mod tv;

pub use diff::{AxisSpec, DiffAxis, GradientOperator, SymGradOperator};
pub use indicator::BoxIndicator;
pub use multibang::{multibang_prox, MultiBang, MultiBangLevels};
pub use norms::{MatrixWeightedL1, SquaredL2, WeightedLp, Weights};
pub use tgv::{tgv2_eval, tgv2_prox, Tgv2, TgvProxResult, DEFAULT_TGV_INNER_ITERS};
pub use tikhonov::{gen_tikhonov_prox, GenTikhonov, DEFAULT_CG_ITERS, DEFAULT_CG_TOL};
pub use tv::{tv_eval, TotalVariation, TvProxResult, TvVariant, DEFAULT_TV_INNER_ITERS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Shape;
use crate::operator::DenseMatrix;
use crate::prox::{ProxFunction, Scaled};

/// Names accepted by [`build`].
pub const REGISTRY: [&str; 11] = [
    "l1",
    "l2",
    "wl1-matrix",
    "tv-iso",
    "tv-aniso",
    "vtv",
    "tv-st",
    "gtik",
    "multibang",
    "box",
    "tgv2",
];

/// Optional knobs; each regularizer reads the ones it understands and
/// rejects the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_iters: Option<usize>,
}

impl RegularizerParams {
    fn set_keys(&self) -> Vec<&'static str> {
        let mut k = Vec::new();
        let mut push = |on: bool, name| {
            if on {
                k.push(name)
            }
        };
        push(self.weights.is_some(), "weights");
        push(self.matrix.is_some(), "matrix");
        push(self.channel_weight.is_some(), "channel_weight");
        push(self.levels.is_some(), "levels");
        push(self.lo.is_some(), "lo");
        push(self.hi.is_some(), "hi");
        push(self.alpha.is_some(), "alpha");
        push(self.beta.is_some(), "beta");
        push(self.inner_iters.is_some(), "inner_iters");
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerSpec {
    pub name: String,
    pub lambda: f64,
    #[serde(default)]
    pub params: RegularizerParams,
}

impl RegularizerSpec {
    pub fn new(name: &str, lambda: f64) -> Self {
        Self {
            name: name.to_string(),
            lambda,
            params: RegularizerParams::default(),
        }
    }
}

fn allowed(name: &str) -> &'static [&'static str] {
    match name {
        "l1" | "l2" => &["weights"],
        "wl1-matrix" => &["matrix"],
        "tv-iso" | "tv-aniso" | "vtv" => &["inner_iters"],
        "tv-st" => &["channel_weight", "inner_iters"],
        "gtik" => &["channel_weight"],
        "multibang" => &["levels"],
        "box" => &["lo", "hi"],
        "tgv2" => &["alpha", "beta", "inner_iters"],
        _ => &[],
    }
}

/// Builds `λ·H` for images of the given shape.
pub fn build(spec: &RegularizerSpec, shape: Shape) -> Result<Box<dyn ProxFunction>> {
    let name = spec.name.as_str();
    if !REGISTRY.contains(&name) {
        return Err(Error::invalid(format!(
            "unknown regularizer '{name}', expected one of {}",
            REGISTRY.join(", ")
        )));
    }
    if !(spec.lambda >= 0.0 && spec.lambda.is_finite()) {
        return Err(Error::invalid("lambda must be finite and nonnegative"));
    }
    let p = &spec.params;
    if let Some(bad) = p.set_keys().into_iter().find(|k| !allowed(name).contains(k)) {
        return Err(Error::invalid(format!("parameter '{bad}' does not apply to '{name}'")));
    }
    let n = shape.len();
    let weights = || -> Result<Weights> {
        match &p.weights {
            None => Ok(Weights::Uniform(1.0)),
            Some(w) if w.len() == n => Ok(Weights::PerElement(w.clone())),
            Some(w) => Err(Error::invalid(format!(
                "{} weights for {n} pixels",
                w.len()
            ))),
        }
    };
    let multi = shape.channels > 1;
    let inner: Box<dyn ProxFunction> = match name {
        "l1" => Box::new(WeightedLp::new(weights()?, 1)?),
        "l2" => Box::new(WeightedLp::new(weights()?, 2)?),
        "wl1-matrix" => {
            let rows = p
                .matrix
                .as_ref()
                .ok_or_else(|| Error::invalid("wl1-matrix needs 'matrix'"))?;
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let m = DenseMatrix::from_rows(&refs)?;
            if m.rows != n || m.cols != n {
                return Err(Error::invalid(format!("matrix must be {n}x{n}")));
            }
            Box::new(MatrixWeightedL1::new(m))
        }
        "tv-iso" | "tv-aniso" | "vtv" | "tv-st" => {
            let variant = match (name, multi) {
                ("tv-iso", false) => TvVariant::Iso2d,
                ("tv-iso", true) => TvVariant::Iso3d,
                ("tv-aniso", false) => TvVariant::Aniso2d,
                ("tv-aniso", true) => TvVariant::Aniso3d,
                ("vtv", _) => TvVariant::Vectorial,
                _ => TvVariant::SpatioTemporal,
            };
            let tv = TotalVariation::with_channel_weight(variant, shape, p.channel_weight.unwrap_or(1.0))?
                .with_inner_iters(p.inner_iters.unwrap_or(DEFAULT_TV_INNER_ITERS));
            Box::new(tv)
        }
        "gtik" => {
            let cw = p.channel_weight.unwrap_or(1.0);
            if !(cw > 0.0) {
                return Err(Error::invalid("channel weight must be positive"));
            }
            Box::new(GenTikhonov::new(GradientOperator::with_channel(shape, cw)))
        }
        "multibang" => {
            let levels = p
                .levels
                .clone()
                .ok_or_else(|| Error::invalid("multibang needs 'levels'"))?;
            Box::new(MultiBang {
                levels: MultiBangLevels::new(levels)?,
            })
        }
        "box" => {
            let hi = p.hi.ok_or_else(|| Error::invalid("box needs 'hi'"))?;
            Box::new(BoxIndicator::uniform(n, p.lo.unwrap_or(0.0), hi)?)
        }
        _ => {
            let t = Tgv2::new(
                GradientOperator::spatial(shape),
                p.alpha.unwrap_or(1.0),
                p.beta.unwrap_or(2.0),
            )?
            .with_inner_iters(p.inner_iters.unwrap_or(DEFAULT_TGV_INNER_ITERS));
            Box::new(t)
        }
    };
    Ok(Box::new(Scaled {
        inner,
        weight: spec.lambda,
    }))
}

//! Total variation family and its prox by accelerated dual projection.

use serde::{Deserialize, Serialize};

use super::diff::GradientOperator;
use crate::error::{Error, Result};
use crate::image::Shape;
use crate::prox::ProxFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvVariant {
    Iso2d,
    Aniso2d,
    Iso3d,
    Aniso3d,
    /// Channelwise isotropic TV summed over channels.
    Vectorial,
    /// Isotropic over (channel/time, row, col) with a channel weight.
    SpatioTemporal,
}

impl TvVariant {
    pub const ALL: [TvVariant; 6] = [
        TvVariant::Iso2d,
        TvVariant::Aniso2d,
        TvVariant::Iso3d,
        TvVariant::Aniso3d,
        TvVariant::Vectorial,
        TvVariant::SpatioTemporal,
    ];

    pub fn isotropic(self) -> bool {
        !matches!(self, TvVariant::Aniso2d | TvVariant::Aniso3d)
    }
}

/// Pointwise grouping of gradient components for the mixed norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Grouping {
    /// One group per pixel across all components (`‖·‖₂,₁`).
    Pixel,
    /// Every entry on its own (`‖·‖₁`).
    Entry,
}

/// `Σ_pixels ‖g(pixel)‖₂` over `comps` component blocks of length `n`.
pub(crate) fn group_norm(g: &[f64], n: usize, comps: usize, grouping: Grouping) -> f64 {
    match grouping {
        Grouping::Entry => g.iter().map(|v| v.abs()).sum(),
        Grouping::Pixel => (0..n)
            .map(|i| {
                (0..comps)
                    .map(|a| g[a * n + i] * g[a * n + i])
                    .sum::<f64>()
                    .sqrt()
            })
            .sum(),
    }
}

/// Projects each group onto the Euclidean ball of radius `radius`.
pub(crate) fn project_groups(g: &mut [f64], n: usize, comps: usize, grouping: Grouping, radius: f64) {
    match grouping {
        Grouping::Entry => g.iter_mut().for_each(|v| *v = v.clamp(-radius, radius)),
        Grouping::Pixel => {
            for i in 0..n {
                let nrm = (0..comps)
                    .map(|a| g[a * n + i] * g[a * n + i])
                    .sum::<f64>()
                    .sqrt();
                if nrm > radius {
                    let s = radius / nrm;
                    (0..comps).for_each(|a| g[a * n + i] *= s);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalVariation {
    variant: TvVariant,
    grad: GradientOperator,
    grouping: Grouping,
    /// Inner dual iterations per prox call.
    pub inner_iters: usize,
}

#[derive(Debug, Clone)]
pub struct TvProxResult {
    pub x: Vec<f64>,
    /// Primal objective `γTV(x) + ½‖x − u‖²` at the returned iterate.
    pub objective: f64,
    pub duality_gap: f64,
}

pub const DEFAULT_TV_INNER_ITERS: usize = 50;

impl TotalVariation {
    pub fn new(variant: TvVariant, shape: Shape) -> Result<Self> {
        Self::with_channel_weight(variant, shape, 1.0)
    }

    pub fn with_channel_weight(variant: TvVariant, shape: Shape, channel_weight: f64) -> Result<Self> {
        let mismatch = |what: &str| {
            Err(Error::invalid(format!("{variant:?} TV needs {what}, got shape {shape}")))
        };
        let grad = match variant {
            TvVariant::Iso2d | TvVariant::Aniso2d => {
                if shape.channels != 1 {
                    return mismatch("a single channel");
                }
                GradientOperator::spatial(shape)
            }
            TvVariant::Iso3d | TvVariant::Aniso3d => GradientOperator::with_channel(shape, 1.0),
            TvVariant::Vectorial => GradientOperator::spatial(shape),
            TvVariant::SpatioTemporal => {
                if !(channel_weight > 0.0) {
                    return Err(Error::invalid("channel weight must be positive"));
                }
                GradientOperator::with_channel(shape, channel_weight)
            }
        };
        let grouping = if variant.isotropic() {
            Grouping::Pixel
        } else {
            Grouping::Entry
        };
        Ok(Self {
            variant,
            grad,
            grouping,
            inner_iters: DEFAULT_TV_INNER_ITERS,
        })
    }

    pub fn with_inner_iters(mut self, iters: usize) -> Self {
        self.inner_iters = iters;
        self
    }

    pub fn variant(&self) -> TvVariant {
        self.variant
    }

    pub fn gradient(&self) -> &GradientOperator {
        &self.grad
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.grad.shape().len() {
            return Err(Error::invalid(format!(
                "TV built for {} samples, got {n}",
                self.grad.shape().len()
            )));
        }
        Ok(())
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let n = self.grad.shape().len();
        group_norm(&self.grad.apply_real(u), n, self.grad.components(), self.grouping)
    }

    /// `argmin_x γ·TV(x) + ½‖x − u‖²` by fast gradient projection on the
    /// dual, returning the best primal iterate seen.
    pub fn prox_detailed(&self, u: &[f64], gamma: f64, iters: usize) -> Result<TvProxResult> {
        self.check(u.len())?;
        let n = u.len();
        let comps = self.grad.components();
        let primal = |x: &[f64]| {
            gamma * self.value(x) + 0.5 * x.iter().zip(u).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        };
        if comps == 0 || gamma <= 0.0 {
            return Ok(TvProxResult {
                x: u.to_vec(),
                objective: primal(u),
                duality_gap: 0.0,
            });
        }
        let lip = self.grad.norm_sq_bound();
        let mut p = vec![0.0; n * comps];
        let mut q = p.clone();
        let mut t = 1.0f64;
        let mut best_x = u.to_vec();
        let mut best_f = primal(u);
        let mut last_p = p.clone();
        for _ in 0..iters {
            // x(q) = u − Dᵀq ; gradient step on the dual then project
            let dtq = self.grad.adjoint_real(&q);
            let x: Vec<f64> = u.iter().zip(&dtq).map(|(a, b)| a - b).collect();
            let dx = self.grad.apply_real(&x);
            let mut p_new: Vec<f64> = q.iter().zip(&dx).map(|(a, b)| a + b / lip).collect();
            project_groups(&mut p_new, n, comps, self.grouping, gamma);
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_new;
            q = p_new
                .iter()
                .zip(&p)
                .map(|(a, b)| a + beta * (a - b))
                .collect();
            p = p_new;
            t = t_new;

            let dtp = self.grad.adjoint_real(&p);
            let xp: Vec<f64> = u.iter().zip(&dtp).map(|(a, b)| a - b).collect();
            let f = primal(&xp);
            if f < best_f {
                best_f = f;
                best_x = xp;
                last_p.clone_from(&p);
            }
        }
        // dual value at the multiplier that produced the best primal
        let dtp = self.grad.adjoint_real(&last_p);
        let uu: f64 = u.iter().map(|a| a * a).sum();
        let res: f64 = u.iter().zip(&dtp).map(|(a, b)| (a - b).powi(2)).sum();
        let dual = 0.5 * uu - 0.5 * res;
        Ok(TvProxResult {
            x: best_x,
            objective: best_f,
            duality_gap: (best_f - dual).max(0.0),
        })
    }
}

impl ProxFunction for TotalVariation {
    fn eval(&self, x: &[f64]) -> f64 {
        self.value(x)
    }
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        Ok(self.prox_detailed(x, step, self.inner_iters)?.x)
    }
    fn domain_len(&self) -> Option<usize> {
        Some(self.grad.shape().len())
    }
    fn name(&self) -> &str {
        match self.variant {
            TvVariant::Iso2d | TvVariant::Iso3d => "tv-iso",
            TvVariant::Aniso2d | TvVariant::Aniso3d => "tv-aniso",
            TvVariant::Vectorial => "vtv",
            TvVariant::SpatioTemporal => "tv-st",
        }
    }
}

/// `TV(u)` for a variant on a given shape.
pub fn tv_eval(u: &[f64], shape: Shape, variant: TvVariant) -> Result<f64> {
    let tv = TotalVariation::new(variant, shape)?;
    tv.check(u.len())?;
    Ok(tv.value(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn shape_for(v: TvVariant) -> Shape {
        match v {
            TvVariant::Iso2d | TvVariant::Aniso2d => Shape::single(4, 5),
            _ => Shape::new(3, 4, 5),
        }
    }

    #[test]
    fn constant_has_zero_tv_and_is_fixed() {
        for v in TvVariant::ALL {
            let s = shape_for(v);
            let u = vec![1.7; s.len()];
            assert_eq!(tv_eval(&u, s, v).unwrap(), 0.0);
            let tv = TotalVariation::new(v, s).unwrap();
            let x = tv.prox(&u, 0.8).unwrap();
            assert!(x.iter().all(|a| (a - 1.7).abs() < 1e-12));
        }
    }

    #[test]
    fn aniso_hand_example() {
        // [[0,1],[0,1]]: two unit column jumps, no row jumps
        let u = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(tv_eval(&u, Shape::single(2, 2), TvVariant::Aniso2d).unwrap(), 2.0);
    }

    #[test]
    fn two_point_closed_form() {
        let tv = TotalVariation::new(TvVariant::Iso2d, Shape::line(2))
            .unwrap()
            .with_inner_iters(500);
        let mut g = rng::seeded(12);
        for _ in 0..30 {
            let ab = rng::normal_vec(&mut g, 2);
            let gamma = 0.05 + rand::Rng::random::<f64>(&mut g);
            let (a, b) = (ab[0], ab[1]);
            let m = 0.5 * (a + b);
            let d = (b - a).abs();
            let shrunk = (d - 2.0 * gamma).max(0.0);
            let s = (b - a).signum();
            let expect = [m - s * shrunk / 2.0, m + s * shrunk / 2.0];
            let x = tv.prox(&[a, b], gamma).unwrap();
            assert!((x[0] - expect[0]).abs() < 1e-6 && (x[1] - expect[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn reverse_triangle_for_every_variant() {
        let mut g = rng::seeded(13);
        for v in TvVariant::ALL {
            let s = shape_for(v);
            for _ in 0..100 {
                let x = rng::normal_vec(&mut g, s.len());
                let ax: Vec<f64> = x.iter().map(|a| a.abs()).collect();
                assert!(tv_eval(&ax, s, v).unwrap() <= tv_eval(&x, s, v).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn prox_keeps_nonnegative_orthant() {
        let mut g = rng::seeded(14);
        let s = Shape::single(6, 6);
        let tv = TotalVariation::new(TvVariant::Iso2d, s).unwrap();
        for _ in 0..20 {
            let r: Vec<f64> = rng::normal_vec(&mut g, s.len()).iter().map(|a| a.abs()).collect();
            let x = tv.prox(&r, 0.5).unwrap();
            assert!(x.iter().all(|&a| a >= -1e-12));
        }
    }

    #[test]
    fn best_objective_reported_with_small_gap() {
        let mut g = rng::seeded(15);
        let s = Shape::single(8, 8);
        let tv = TotalVariation::new(TvVariant::Aniso2d, s).unwrap();
        let u = rng::normal_vec(&mut g, s.len());
        let short = tv.prox_detailed(&u, 0.3, 10).unwrap();
        let long = tv.prox_detailed(&u, 0.3, 400).unwrap();
        assert!(long.objective <= short.objective);
        assert!(long.duality_gap < 1e-3, "gap {}", long.duality_gap);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(TotalVariation::new(TvVariant::Iso2d, Shape::new(2, 3, 3)).is_err());
        assert!(tv_eval(&[0.0; 5], Shape::single(2, 2), TvVariant::Aniso2d).is_err());
    }
}

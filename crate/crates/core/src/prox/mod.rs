//! Proximal maps of magnitude-only regularizers `G(z) = H(|z|)`.
//!
//! [`magnitude_lift`] evaluates `prox_{τG}(z)` from `prox_{τH}` alone. It
//! starts the Douglas-Rachford bounded prox at `y₀ = |z|`, so whenever
//! `prox_{τH}(|z|)` is already nonnegative the result is the plain phase
//! reattachment `prox_{τH}(|z|) ∘ Φ` and no DR iterations run.

mod oracle;

pub use oracle::{brute_force_prox_oracle, lift_objective, OracleConfig};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{self, ComplexImage, MagPhase};
use crate::solvers::dr_loop;

/// A regularizer `H` on real vectors together with its proximal map.
pub trait ProxFunction: Send + Sync {
    /// Value of `H(x)`, `+∞` outside its domain.
    fn eval(&self, x: &[f64]) -> f64;

    /// `argmin_y H(y) + ‖y − x‖² / (2·step)`.
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>>;

    /// Required input length, or `None` when any length is accepted.
    fn domain_len(&self) -> Option<usize> {
        None
    }

    /// Nonconvex maps (multi-bang, level sets) return `false`; for them the
    /// prox is a stationary point rather than a certified minimizer.
    fn is_convex(&self) -> bool {
        true
    }

    fn name(&self) -> &str;
}

impl<P: ProxFunction + ?Sized> ProxFunction for Box<P> {
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        (**self).prox(x, step)
    }
    fn domain_len(&self) -> Option<usize> {
        (**self).domain_len()
    }
    fn is_convex(&self) -> bool {
        (**self).is_convex()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<P: ProxFunction + ?Sized> ProxFunction for &P {
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        (**self).prox(x, step)
    }
    fn domain_len(&self) -> Option<usize> {
        (**self).domain_len()
    }
    fn is_convex(&self) -> bool {
        (**self).is_convex()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

/// `H = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ProxFunction for Zero {
    fn eval(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn prox(&self, x: &[f64], _step: f64) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
    fn name(&self) -> &str {
        "zero"
    }
}

/// `weight · H`, with `prox_{τ·weight·H} = H.prox(·, τ·weight)`.
#[derive(Debug, Clone)]
pub struct Scaled<P> {
    pub inner: P,
    pub weight: f64,
}

impl<P: ProxFunction> ProxFunction for Scaled<P> {
    fn eval(&self, x: &[f64]) -> f64 {
        if self.weight == 0.0 {
            // 0·∞ stays 0 only inside the domain; keep indicator semantics
            let v = self.inner.eval(x);
            return if v.is_finite() { 0.0 } else { v };
        }
        self.weight * self.inner.eval(x)
    }
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        if self.weight == 0.0 {
            return Ok(x.to_vec());
        }
        self.inner.prox(x, step * self.weight)
    }
    fn domain_len(&self) -> Option<usize> {
        self.inner.domain_len()
    }
    fn is_convex(&self) -> bool {
        self.inner.is_convex()
    }
    fn name(&self) -> &str {
        self.inner.name()
    }
}

/// How the Douglas-Rachford fallback decides it is done.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackExit {
    /// Iterate until the iterate is nonnegative (within `dr_tol`) and has
    /// stopped moving (`‖x_{k+1} − x_k‖∞ < dr_tol`).
    #[default]
    Converged,
    /// Leave as soon as the iterate is nonnegative, or stalls.
    FirstFeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftConfig {
    pub max_dr_iters: usize,
    pub dr_tol: f64,
    pub exit: FallbackExit,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self {
            max_dr_iters: 500,
            dr_tol: 1e-9,
            exit: FallbackExit::Converged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MagLiftReport {
    pub dr_iterations: usize,
    pub entered_fallback: bool,
    /// Smallest component of the final magnitude iterate before clamping.
    pub final_min_component: f64,
}

/// Elementwise `max(x, 0)`.
pub fn project_nonneg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Prox of `F(x) = χ_{≥0}(x) + ½‖x − r‖²` at `y`: `max((r + y)/2, 0)`.
pub fn prox_f_shifted(y: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    if y.len() != r.len() {
        return Err(Error::invalid(format!(
            "prox_F: lengths {} and {} differ",
            y.len(),
            r.len()
        )));
    }
    Ok(y.iter().zip(r).map(|(&a, &b)| (0.5 * (a + b)).max(0.0)).collect())
}

fn min_component(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(what.to_string()))
    }
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("prox step must be positive, got {step}")))
    }
}

fn check_domain<P: ProxFunction + ?Sized>(h: &P, n: usize) -> Result<()> {
    match h.domain_len() {
        Some(d) if d != n => Err(Error::invalid(format!(
            "{} expects {d} samples, got {n}",
            h.name()
        ))),
        _ => Ok(()),
    }
}

/// The shared Algorithm-1 loop: bounded prox of `τH` at `r ≥ 0`.
/// Returns the unclamped final iterate and the report.
fn bounded_prox_core<P: ProxFunction + ?Sized>(
    h: &P,
    r: &[f64],
    step: f64,
    cfg: &LiftConfig,
) -> Result<(Vec<f64>, MagLiftReport)> {
    check_step(step)?;
    check_domain(h, r.len())?;
    let tol = cfg.dr_tol;
    let x0 = h.prox(r, step)?;
    check_finite(&x0, "prox_H")?;
    let min0 = min_component(&x0);
    if x0.is_empty() || min0 >= -tol {
        let final_min_component = if x0.is_empty() { 0.0 } else { min0 };
        return Ok((
            x0,
            MagLiftReport {
                dr_iterations: 0,
                entered_fallback: false,
                final_min_component,
            },
        ));
    }

    let exit = cfg.exit;
    let outcome = dr_loop(
        |y: &[f64]| {
            let x = h.prox(y, step)?;
            check_finite(&x, "prox_H")?;
            Ok(x)
        },
        |v: &[f64]| {
            v.iter()
                .zip(r)
                .map(|(&a, &b)| (0.5 * (a + b)).max(0.0))
                .collect()
        },
        r.to_vec(),
        x0,
        cfg.max_dr_iters,
        |x: &[f64], change: f64| {
            let feasible = min_component(x) >= -tol;
            match exit {
                FallbackExit::Converged => feasible && change < tol,
                FallbackExit::FirstFeasible => feasible || change < tol,
            }
        },
    )?;
    let report = MagLiftReport {
        dr_iterations: outcome.iterations,
        entered_fallback: true,
        final_min_component: min_component(&outcome.x),
    };
    if report.final_min_component < -tol {
        return Err(Error::LiftConvergence { report });
    }
    Ok((outcome.x, report))
}

/// `argmin_{x ≥ 0} τH(x) + ½‖x − r‖²`, clamped to the orthant.
pub fn bounded_prox<P: ProxFunction + ?Sized>(
    h: &P,
    r: &[f64],
    step: f64,
    cfg: &LiftConfig,
) -> Result<(Vec<f64>, MagLiftReport)> {
    if let Some(i) = r.iter().position(|&v| !(v >= 0.0)) {
        return Err(Error::invalid(format!(
            "bounded prox needs r >= 0, got {} at index {i}",
            r[i]
        )));
    }
    let (x, report) = bounded_prox_core(h, r, step, cfg)?;
    Ok((project_nonneg(&x), report))
}

/// `prox_{τH(|·|)}(z)` on a flat complex vector; also returns the phase
/// split of `z` so callers can inspect the reattached phase.
pub fn magnitude_lift_slice<P: ProxFunction + ?Sized>(
    h: &P,
    z: &[Complex64],
    step: f64,
    cfg: &LiftConfig,
) -> Result<(Vec<Complex64>, MagLiftReport)> {
    let (r, phase) = image::split_slice(z)?;
    let (x, report) = bounded_prox_core(h, &r, step, cfg)?;
    let out = x
        .iter()
        .zip(&phase)
        .map(|(&m, &p)| p * m.max(0.0))
        .collect();
    Ok((out, report))
}

/// Proximal map of `G(z) = H(|z|)` with step `τ`.
///
/// The output is `x ∘ Φ` where `Φ` is the phase of `z` (1 where `z = 0`)
/// and `x` the bounded prox of `τH` at `|z|`; the phase factor is copied,
/// not recomputed.
pub fn magnitude_lift<P: ProxFunction + ?Sized>(
    h: &P,
    z: &ComplexImage,
    step: f64,
    cfg: &LiftConfig,
) -> Result<(ComplexImage, MagLiftReport)> {
    let m = image::decompose(z)?;
    let (x, report) = lift_magphase(h, &m, step, cfg)?;
    Ok((ComplexImage::new(z.shape(), x)?, report))
}

/// As [`magnitude_lift`] on an already decomposed input.
pub fn lift_magphase<P: ProxFunction + ?Sized>(
    h: &P,
    m: &MagPhase,
    step: f64,
    cfg: &LiftConfig,
) -> Result<(Vec<Complex64>, MagLiftReport)> {
    let (x, report) = bounded_prox_core(h, m.magnitude(), step, cfg)?;
    Ok((m.with_magnitude(&project_nonneg(&x)), report))
}

//! Regularized least squares `min ½‖Az − d‖² + H(|z|)` by PDHG with the
//! magnitude lift as the primal prox.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pdhg::{pdhg, prox_l2_data_conjugate};
use super::{SolverConfig, SolverTrace};
use crate::error::{Error, Result};
use crate::image::{split_slice, ComplexImage, Shape};
use crate::operator::{norm, LinearOperator};
use crate::prox::{magnitude_lift_slice, ProxFunction};

pub struct Problem<'a> {
    pub operator: &'a dyn LinearOperator<Complex64>,
    pub data: &'a [Complex64],
    pub shape: Shape,
    /// Already carries its weight `λ`.
    pub regularizer: &'a dyn ProxFunction,
}

/// Bookkeeping over every magnitude-lift call made by the solver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LiftStats {
    pub calls: usize,
    pub fallback_calls: usize,
    pub dr_iterations: usize,
    /// Largest `|Φ_out − Φ_in|` over pixels with nonzero output.
    pub max_phase_deviation: f64,
}

pub struct Reconstruction {
    pub image: ComplexImage,
    pub initial: ComplexImage,
    pub trace: SolverTrace,
    pub lift: LiftStats,
    /// Input of the final prox call; its phase is the phase of `image`.
    pub last_prox_input: Vec<Complex64>,
}

fn misfit(ax: &[Complex64], d: &[Complex64]) -> f64 {
    0.5 * ax.iter().zip(d).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
}

/// Scaled backprojection `Aᴴd / ‖A‖²`.
pub fn backprojection_start(op: &dyn LinearOperator<Complex64>, d: &[Complex64]) -> Vec<Complex64> {
    let l = op.norm_estimate();
    let s = if l > 0.0 { 1.0 / (l * l) } else { 0.0 };
    op.adjoint(d).into_iter().map(|v| v * s).collect()
}

pub fn reconstruct(problem: &Problem<'_>, cfg: &SolverConfig) -> Result<Reconstruction> {
    let op = problem.operator;
    let n = problem.shape.len();
    if op.domain_len() != n {
        return Err(Error::invalid(format!(
            "operator domain {} does not match image shape {}",
            op.domain_len(),
            problem.shape
        )));
    }
    if problem.data.len() != op.range_len() {
        return Err(Error::invalid(format!(
            "data has {} samples, operator range is {}",
            problem.data.len(),
            op.range_len()
        )));
    }
    let h = problem.regularizer;
    let d = problem.data;
    let x0 = backprojection_start(op, d);
    let initial = ComplexImage::new(problem.shape, x0.clone())?;
    let mut stats = LiftStats::default();
    let mut last_input = x0.clone();
    let lift_cfg = cfg.lift;
    let (x, trace) = pdhg(
        op,
        |y: &[Complex64], s| Ok(prox_l2_data_conjugate(y, s, d)),
        |v: &[Complex64], tau| {
            let (out, report) = magnitude_lift_slice(h, v, tau, &lift_cfg)?;
            let (_, phase_in) = split_slice(v)?;
            let (mag_out, phase_out) = split_slice(&out)?;
            let dev = mag_out
                .iter()
                .zip(phase_in.iter().zip(&phase_out))
                .filter(|(m, _)| **m > 0.0)
                .map(|(_, (a, b))| (a - b).norm())
                .fold(0.0, f64::max);
            stats.calls += 1;
            stats.fallback_calls += report.entered_fallback as usize;
            stats.dr_iterations += report.dr_iterations;
            stats.max_phase_deviation = stats.max_phase_deviation.max(dev);
            last_input.clear();
            last_input.extend_from_slice(v);
            Ok(out)
        },
        x0,
        cfg,
        |x, ax| {
            let mags: Vec<f64> = x.iter().map(|v| v.norm()).collect();
            Ok((misfit(ax, d), h.eval(&mags)))
        },
    )?;
    if norm(&x).is_nan() {
        return Err(Error::Numerical("reconstruction".into()));
    }
    Ok(Reconstruction {
        image: ComplexImage::new(problem.shape, x)?,
        initial,
        trace,
        lift: stats,
        last_prox_input: last_input,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DenseMatrix, Identity};
    use crate::prox::{Scaled, Zero};
    use crate::regularizers::{BoxIndicator, WeightedLp};
    use crate::rng;

    #[test]
    fn zero_weight_descends_from_backprojection() {
        let mut g = rng::seeded(8);
        let (m, n) = (20, 9);
        let re = DenseMatrix::new(m, n, rng::normal_vec(&mut g, m * n)).unwrap();
        let d = rng::complex_normal_vec(&mut g, m);
        let h = Scaled {
            inner: WeightedLp::uniform(1.0, 1).unwrap(),
            weight: 0.0,
        };
        let p = Problem {
            operator: &re,
            data: &d,
            shape: Shape::single(3, 3),
            regularizer: &h,
        };
        let r = reconstruct(&p, &SolverConfig::default()).unwrap();
        let first = r.trace.rows[0].misfit;
        let last = r.trace.last().unwrap().misfit;
        assert!(last <= first);
        assert_eq!(r.lift.fallback_calls, 0);
    }

    #[test]
    fn box_keeps_magnitudes_bounded_and_phase_intact() {
        let mut g = rng::seeded(9);
        let d: Vec<Complex64> = rng::complex_normal_vec(&mut g, 16).iter().map(|v| v * 3.0).collect();
        let h = BoxIndicator::uniform(16, 0.0, 1.0).unwrap();
        let p = Problem {
            operator: &Identity { len: 16 },
            data: &d,
            shape: Shape::single(4, 4),
            regularizer: &h,
        };
        let r = reconstruct(&p, &SolverConfig::default()).unwrap();
        assert!(r.image.magnitudes().iter().all(|&m| m <= 1.0 + 1e-12));
        assert!(r.lift.max_phase_deviation <= 1e-12);
        for (z, di) in r.image.data().iter().zip(&d) {
            if z.norm() > 0.0 {
                assert!((z.arg() - di.arg()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_regularizer_solves_identity_problem() {
        let mut g = rng::seeded(10);
        let d = rng::complex_normal_vec(&mut g, 6);
        let p = Problem {
            operator: &Identity { len: 6 },
            data: &d,
            shape: Shape::line(6),
            regularizer: &Zero,
        };
        let r = reconstruct(&p, &SolverConfig::default()).unwrap();
        let err: f64 = r.image.data().iter().zip(&d).map(|(a, b)| (a - b).norm()).sum();
        assert!(err < 1e-6);
    }
}

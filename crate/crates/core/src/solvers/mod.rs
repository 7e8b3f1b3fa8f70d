//! PDHG and Douglas-Rachford solvers, configuration and iteration traces.

mod dr;
mod pdhg;
mod reconstruct;

pub(crate) use dr::dr_loop;
pub use dr::{douglas_rachford, DrOutcome};
pub use pdhg::{pdhg, prox_l2_data_conjugate, resolve_steps, MIN_DUAL_STEP};
pub use reconstruct::{backprojection_start, reconstruct, LiftStats, Problem, Reconstruction};

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::LiftConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Primal step; derived from the operator norm when absent.
    pub tau: Option<f64>,
    /// Dual step; derived from the operator norm when absent.
    pub sigma: Option<f64>,
    /// Over-relaxation of the primal extrapolation.
    pub theta: f64,
    /// Stop once `‖x_{k+1} − x_k‖ / ‖x_k‖` falls below this (0 disables).
    pub tol: f64,
    /// Log every `trace_stride`-th iteration (the last one is always logged).
    pub trace_stride: usize,
    pub lift: LiftConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tau: None,
            sigma: None,
            theta: 1.0,
            tol: 0.0,
            trace_stride: 1,
            lift: LiftConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        for (name, v) in [("tau", self.tau), ("sigma", self.sigma)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!("{name} must be positive")));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid("theta must lie in [0, 1]"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol must be nonnegative"));
        }
        if self.trace_stride == 0 {
            return Err(Error::invalid("trace_stride must be at least 1"));
        }
        if !(self.lift.dr_tol >= 0.0) {
            return Err(Error::invalid("dr_tol must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub misfit: f64,
    pub reg: f64,
    /// `‖x_{k+1} − x_k‖`
    pub step_change: f64,
    /// Wall time since the solver started.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_CSV_HEADER: &str = "iteration,objective,misfit,reg,step_change,seconds";

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRACE_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:.6}",
                r.iteration, r.objective, r.misfit, r.reg, r.step_change, r.seconds
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::prox::MagLiftReport;
use crate::solvers::SolverTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("magnitude lift did not converge after {} DR iterations (min component {:.3e})", .report.dr_iterations, .report.final_min_component)]
    LiftConvergence { report: MagLiftReport },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("non-finite value encountered in {0}")]
    Numerical(String),

    #[error("solver failed at iteration {iteration}: {message}")]
    Solver {
        iteration: usize,
        message: String,
        trace: Box<SolverTrace>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

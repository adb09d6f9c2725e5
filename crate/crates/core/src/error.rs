use thiserror::Error;

use crate::primal::{RestartRecord, SolveReport};
use crate::dual::ProjectionReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point outside the regularizer domain: x[{index}] = {value}")]
    Domain { index: usize, value: f64 },

    #[error("{solver} does not support the {regularizer} regularizer: {reason}")]
    Unsupported {
        solver: &'static str,
        regularizer: &'static str,
        reason: &'static str,
    },

    #[error("non-finite objective at iteration {iter} (max |x| = {max_abs_x:e})")]
    NonFinite { iter: usize, max_abs_x: f64 },

    #[error("restart budget exhausted after {} rounds", log.len())]
    RestartBudget {
        log: Vec<RestartRecord>,
        best: Box<SolveReport>,
    },

    #[error("projection solve did not certify within budget after {iters} iterations")]
    ProjectionBudget {
        iters: usize,
        best: Box<ProjectionReport>,
    },

    #[error("graph generation failed: {0}")]
    Topology(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

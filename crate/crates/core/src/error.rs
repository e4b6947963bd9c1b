use thiserror::Error;

use crate::dimers::SymmetryOp;
use crate::lattice::BoundaryCondition;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice side length must be at least 3, got {0}")]
    LatticeTooSmall(usize),

    #[error("{what}: {got} exceeds the configured limit of {limit}")]
    SizeCap {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("symmetry {op:?} is not defined on a {boundary} lattice")]
    SymmetryMismatch {
        op: SymmetryOp,
        boundary: BoundaryCondition,
    },

    #[error("image of covering {covering} under {op:?} is missing from the covering list (enumeration is incomplete)")]
    OrbitEscape { covering: usize, op: SymmetryOp },

    #[error("covering belongs to a {found} lattice of side {found_n}, expected {expected} of side {expected_n}")]
    LatticeMismatch {
        expected: BoundaryCondition,
        expected_n: usize,
        found: BoundaryCondition,
        found_n: usize,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("classical bound vanishes at epsilon = {epsilon}; ratio undefined")]
    DegenerateClassicalBound { epsilon: f64 },

    #[error("linear system is inconsistent (residual {residual:e})")]
    InconsistentSystem { residual: f64 },

    #[error("eigensolver did not converge after {iterations} iterations: estimate {estimate}, residual {residual:e}")]
    NotConverged {
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::OrbitEscape { .. }
                | Error::DegenerateClassicalBound { .. }
                | Error::InconsistentSystem { .. }
                | Error::NotConverged { .. }
        )
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping of errors, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Input,
    Convergence,
    Validation,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected} values, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("dense kernel needs {nodes} nodes, cap is {cap}")]
    KernelCap { nodes: usize, cap: usize },

    #[error("coordinate {value} outside [0, 1]")]
    Domain { value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("wall validation failed: {0}")]
    Walls(String),

    #[error("drift is not nondecreasing: f({x:?}, {s1}) = {f1} > f({x:?}, {s2}) = {f2}")]
    NotMonotone {
        x: Vec<f64>,
        s1: f64,
        s2: f64,
        f1: f64,
        f2: f64,
    },

    #[error("diffusion exceeds its Lipschitz bound {bound} between states {s1} and {s2} at {x:?}")]
    NotLipschitz {
        x: Vec<f64>,
        s1: f64,
        s2: f64,
        bound: f64,
    },

    #[error("{stage} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("residual mass {mass:e} of the wrong sign on the {wall} contact set at node {node}")]
    WrongSign {
        wall: &'static str,
        node: usize,
        mass: f64,
    },

    #[error("active-set enumeration found {0} feasible assignments, expected exactly one")]
    Enumeration(usize),

    #[error("need at least {needed} records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("all {0} replicates failed")]
    AllReplicatesFailed(usize),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidGrid(_)
            | Error::GridMismatch { .. }
            | Error::KernelCap { .. }
            | Error::Domain { .. }
            | Error::InvalidParameter { .. }
            | Error::InsufficientRecords { .. } => ErrorCategory::Input,
            Error::NonConvergence { .. }
            | Error::WrongSign { .. }
            | Error::AllReplicatesFailed(_) => ErrorCategory::Convergence,
            Error::Walls(_)
            | Error::NotMonotone { .. }
            | Error::NotLipschitz { .. }
            | Error::NonFinite { .. } => ErrorCategory::Validation,
            Error::Enumeration(_) | Error::Internal(_) => ErrorCategory::Internal,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

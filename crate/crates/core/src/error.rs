use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed edge-list input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A node id was outside the valid range for the graph or index set.
    #[error("index {index} out of range (valid: 0..{len})")]
    IndexOutOfRange { index: usize, len: usize },

    /// Parameters violate a documented precondition.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The eigensolver did not reach the requested residual tolerance.
    /// Carries the best residual achieved for each requested pair.
    #[error("eigensolver did not converge within {iterations} iterations (best residuals: {residuals:?})")]
    Convergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    /// Subgraph clustering produced a community with no members, so the
    /// per-community size matrix is singular. Increase m or restarts.
    #[error("estimated community {0} is empty")]
    EmptyEstimatedCommunity(usize),

    /// An estimated community has no edges inside the subgraph, so its
    /// popularity profile is undefined.
    #[error("estimated community {0} has no edges within the subgraph")]
    DisconnectedEstimatedCommunity(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A specification (lattice, model, ensemble, planner input) failed
    /// validation before any computation started.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Mismatched array sizes between cooperating objects.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The request exceeds a hard resource cap (e.g. Hilbert-space size).
    #[error("resource limit: {0}")]
    Resource(String),

    /// A computation produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The squeezing parameter is undefined (vanishing Bloch vector).
    #[error("squeezing undefined: Bloch vector length {0:.3e} below threshold")]
    UndefinedSqueezing(f64),

    /// An analysis reduction could not be carried out.
    #[error("analysis error: {0}")]
    Analysis(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }
}

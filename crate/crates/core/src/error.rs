//! Error types shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error(
        "diagonalization did not converge at basis_dim {basis_dim}: \
         max energy change {residual:.3e} GHz over the last +20 states"
    )]
    NonConvergence { basis_dim: usize, residual: f64 },

    #[error("ambiguous eigenstate labeling: {0}")]
    AmbiguousLabeling(String),

    #[error("missing state label |{0}>")]
    MissingLabel(String),

    #[error("no root in bracket: {0}")]
    NoRoot(String),

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("optimizer failed: {0}")]
    OptimizerFailure(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

use thiserror::Error;

use crate::cones::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionError(String),

    #[error("matrix is not entrywise nonnegative (min entry {min_entry:e})")]
    NotNonnegative { min_entry: f64 },

    #[error("lifting order must be at least 1")]
    InvalidOrder,

    #[error("system is not Schur stable: {0}")]
    UnstableSystem(String),

    #[error("cone {0} cannot be handled by the solver; use the PSD+NN relaxation")]
    UnsupportedCone(&'static str),

    #[error("exact positive norm needs at most 4 columns, got {0}")]
    ColumnCountExceeded(usize),

    #[error("solver finished with status {status:?}{}", context.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    Solver {
        status: SolveStatus,
        context: Option<String>,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionError(msg.into())
    }

    pub(crate) fn solver(status: SolveStatus, context: impl Into<String>) -> Self {
        Error::Solver {
            status,
            context: Some(context.into()),
        }
    }
}

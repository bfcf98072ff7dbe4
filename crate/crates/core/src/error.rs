use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value violates a model constraint.
    #[error("{0}")]
    Validation(String),

    #[error("v-floor breached: min(v) = {min_v:e} <= hard floor {hard_floor:e}")]
    VFloorBreached { min_v: f64, hard_floor: f64 },

    #[error("helmholtz solve did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("non-finite value in field `{0}`")]
    NonFinite(&'static str),

    #[error("diagnostic overflow in `{0}`")]
    DiagnosticOverflow(&'static str),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("explicit time step {dt:e} fell below dt_min {dt_min:e}")]
    DtUnderflow { dt: f64, dt_min: f64 },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (‖S + Sᵀ‖ = {asymmetry:e})")]
    NotSkewSymmetric { asymmetry: f64 },

    #[error("matrix is not a rotation (max |RRᵀ − I| = {orthogonality:e}, det = {determinant})")]
    InvalidRotation {
        orthogonality: f64,
        determinant: f64,
    },

    #[error("invalid inertia: {0}")]
    InvalidInertia(String),

    #[error("non-finite rigid-body state after integration step")]
    NonFiniteState,

    #[error("tank underflow: clamping absorbed {deficit:e} J in one step (limit {limit:e} J)")]
    TankUnderflow { deficit: f64, limit: f64 },

    #[error("parse error in {source_name}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
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
}

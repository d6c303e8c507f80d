use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("field generation failed: {0}")]
    Generation(String),

    #[error("invalid field file {path}: {reason}")]
    FieldFile { path: PathBuf, reason: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("singular interface matrix (pivot ratio {pivot_ratio:.3e}); near-null vector has {} entries", near_null.len())]
    SingularInterface {
        pivot_ratio: f64,
        near_null: Vec<f64>,
    },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("CFL violation: saturation {value} in cell {cell}")]
    Cfl { cell: usize, value: f64 },

    #[error("basis set was built for a different conductivity or decomposition: {0}")]
    BasisMismatch(String),

    #[error("zero reference norm")]
    ZeroReference,

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular(_)
            | Error::SingularInterface { .. }
            | Error::NotConverged { .. }
            | Error::Cfl { .. }
            | Error::Generation(_)
            | Error::BasisMismatch(_)
            | Error::ZeroReference => true,
            Error::AtStep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

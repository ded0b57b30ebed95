use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge: {message} (last residual {last_residual:.3e} after {iterations} iterations)")]
    Solver {
        message: String,
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("set-point control failed after {iterations} outer iterations: {message}")]
    Control {
        message: String,
        iterations: usize,
        /// (Q_k, PDD_k) pairs visited before giving up.
        history: Vec<(f64, f64)>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
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
}

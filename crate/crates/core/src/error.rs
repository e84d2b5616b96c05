use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("blow-up guard tripped at t = {t}: L-infinity grew by a factor {growth:.3e}")]
    BlowUp { t: f64, growth: f64 },

    #[error("caustic guard tripped at t = {t}: |hess phi|_inf = {hessian:.3e} exceeds {limit:.3e}")]
    Caustic { t: f64, hessian: f64, limit: f64 },

    #[error("singularity guard tripped at t = {t}: |grad v|_inf = {gradient:.3e} exceeds {limit:.3e}")]
    Singularity { t: f64, gradient: f64, limit: f64 },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed snapshot {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Guard trips are recorded as failed sweep cells rather than aborting a run.
    pub fn is_guard_trip(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. } | Error::Caustic { .. } | Error::Singularity { .. }
        )
    }
}

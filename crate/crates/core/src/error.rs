use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is not Hermitian (residual {residual:.3e} > {tol:.1e})")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("zero detuning: {symbol} = 0 makes the dispersive formulas divide by zero")]
    ZeroDetuning { symbol: &'static str },

    #[error("critical coupling g_c undefined: {0}")]
    CriticalCouplingUndefined(String),

    #[error("integration failed at t = {t_us:.6e} us: {reason}")]
    IntegrationFailed { t_us: f64, reason: String },

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("run `{label}` failed: {source}")]
    RunFailed {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Configuration errors map to exit code 2, everything else to 1.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config { .. }
            | Error::ZeroDetuning { .. }
            | Error::CriticalCouplingUndefined(_) => true,
            Error::RunFailed { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the measurement and identification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("decay does not reach {target_db} dB (minimum reached {reached_db:.1} dB)")]
    InsufficientDecay { target_db: f64, reached_db: f64 },

    #[error("energy never meets the pseudo-noise curve inside the window")]
    NoCrossing,

    #[error("C50 saturates: D50 = {0}")]
    Saturated(f64),

    #[error("RIR of {rir_len} samples is longer than the MLS period of {period} samples")]
    TimeAliasing { rir_len: usize, period: usize },

    #[error("{feature}{}: {source}", band.map(|b| format!(" ({b} Hz band)")).unwrap_or_default())]
    Feature {
        feature: &'static str,
        band: Option<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: row {row}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical estimator (as opposed to bad input
    /// data or I/O).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::InsufficientDecay { .. } | Error::NoCrossing | Error::Saturated(_) => true,
            Error::Degenerate(_) => true,
            Error::Feature { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

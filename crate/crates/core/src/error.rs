use std::path::PathBuf;

use crate::network::SpectrumReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or configuration value is outside its valid range.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The network fails the Λ_max(ΩᵀΩ) < 1 stationarity condition.
    #[error("network is not stationary: lambda_max(Omega^T Omega) = {:.6} (must be < 1)", .report.lambda_max_omega)]
    Stationarity { report: SpectrumReport },

    #[error("simulation exceeded the guard limit of {limit} events before t = {time:.3}; the network is effectively unstable")]
    Runaway { limit: usize, time: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 configuration, 3 stationarity, 4 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Dimension(_) | Error::Json(_) => 2,
            Error::Stationarity { .. } | Error::Runaway { .. } => 3,
            Error::NonFinite(_) | Error::Data(_) | Error::Io { .. } | Error::Csv(_) => 4,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: &'static str, reason: String },
    #[error("energy 0 is absorbing and has no step distribution")]
    AbsorbingState,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("max_agents must be >= 1")]
    ZeroAgentCap,
    #[error("horizon must be >= 1")]
    ZeroHorizon,
    #[error("cannot build a histogram from an empty outcome list")]
    EmptyOutcomes,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("exact like-count distribution is only defined for the default four-outcome kernel")]
    ExtendedKernel,
    #[error("enumeration needs 4^T_max paths; T_max = {t_max} exceeds the limit of {limit}")]
    EnumerationTooLarge { t_max: u32, limit: u32 },
}

/// Why a fit could not be produced. Fitters return this instead of panicking
/// on degenerate data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid Weibull parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("histogram error: {0}")]
    Histogram(String),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing or invalid header, expected message_id,timestamp,likes,retweets[,text]")]
    Header { path: PathBuf },
    #[error("row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },
    #[error("message `{message_id}`, row {row}: {reason}")]
    NonMonotone {
        message_id: String,
        row: u64,
        reason: String,
    },
    #[error("store line {line} could not be encoded: {source}")]
    Encode {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HhtError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{value}` as a finite number")]
    ParseValue { row: usize, value: String },
    #[error("row {row}: missing value")]
    MissingValue { row: usize },
    #[error("row {row}: cannot parse timestamp `{value}`")]
    ParseTimestamp { row: usize, value: String },
    #[error("row {row}: timestamp is not strictly after the previous one")]
    TimestampOrder { row: usize },
    #[error("index {index}: value {value} is not strictly positive")]
    NonPositive { index: usize, value: f64 },
    #[error("series is empty")]
    EmptySeries,
    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("too few extrema for an envelope: {maxima} maxima, {minima} minima")]
    TooFewExtrema { maxima: usize, minima: usize },
    #[error("range error: {0}")]
    Range(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("singular system in {0}")]
    Singular(&'static str),
    #[error("walk-forward step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<HhtError>,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HhtError> = std::result::Result<T, E>;

impl HhtError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        HhtError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

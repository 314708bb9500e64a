use std::io;

use thiserror::Error;

/// Errors raised anywhere in the feature, training and inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed container or header.
    #[error("format error: {0}")]
    Format(String),

    /// Well-formed container using a codec or layout we do not read.
    #[error("unsupported format: {field} = {value}")]
    UnsupportedFormat { field: &'static str, value: String },

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Clip longer than the requested target.
    #[error("length error: clip has {actual} samples, target is {target}")]
    Length { actual: usize, target: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    /// Bad input data (non-finite values, out-of-range labels, mismatched lengths).
    #[error("data error: {0}")]
    Data(String),

    #[error("training error: {0}")]
    Training(String),

    /// A field of a dataset file name could not be parsed.
    #[error("parse error in field `{field}`: {message}")]
    Parse { field: &'static str, message: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("state error: {0}")]
    State(String),

    /// NaN or Inf encountered where finite values are required.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

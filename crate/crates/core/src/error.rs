use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A time does not sit on the grid within half a step.
    #[error("precision error: {0}")]
    Precision(String),
    /// Grids, dimensions or engine settings are incompatible.
    #[error("configuration error: {0}")]
    Configuration(String),
    /// Invalid experiment configuration, with the 1-based line when known.
    #[error("{}", match .line { Some(l) => format!("config line {l}: {}", .message), None => format!("config: {}", .message) })]
    Config { line: Option<usize>, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Configuration(msg.into()))
}

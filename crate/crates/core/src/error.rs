use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at byte offset {offset}: {source}")]
    Io {
        offset: u64,
        #[source]
        source: io::Error,
    },
    #[error("bad trace format: {0}")]
    Format(String),
    #[error("corrupt trace at record {index}: {reason}")]
    Corrupt { index: u64, reason: String },
    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid synthetic trace spec: {0}")]
    InvalidSpec(String),
    #[error("invalid cache geometry: {0}")]
    Geometry(String),
    #[error("configuration out of bounds: {0}")]
    Bounds(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cache invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

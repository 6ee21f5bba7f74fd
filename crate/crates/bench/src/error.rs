use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at key \"{0}\"")]
    Schema(String),
    #[error("unsupported format_version {0}")]
    Version(u64),
    #[error("unknown benchmark \"{0}\"")]
    UnknownBenchmark(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Solver(#[from] rmdp_core::Error),
}

impl BenchError {
    /// Process exit code: 2 for file problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Io { .. } | BenchError::Parse { .. } | BenchError::Schema(_) | BenchError::Version(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

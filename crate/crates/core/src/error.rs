use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown schema tag `{0}`")]
    UnknownSchema(String),

    #[error("invalid content hash `{0}`")]
    InvalidHash(String),

    #[error("unknown task kind `{0}`")]
    UnknownTask(String),
}

use std::path::PathBuf;

use unisim_backends::{BackendError, PromptError};
use unisim_core::{CoreError, SimilarityError};
use unisim_forge::ForgeError;
use unisim_trainer::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no {0} to evaluate")]
    Empty(&'static str),
    #[error("every query of {0} lacks positives")]
    AllQueriesSkipped(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Forge(#[from] ForgeError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl BenchError {
    pub(crate) fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Problems with what the user asked for, as opposed to failures while doing it.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            BenchError::Config(_)
                | BenchError::Train(TrainError::Config(_))
                | BenchError::Forge(ForgeError::UnknownDataset { .. })
        )
    }
}

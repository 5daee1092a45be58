use std::path::PathBuf;

use unisim_backends::EmbFormatError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: String,
        got: String,
    },
    #[error("task {0} has no samples")]
    EmptyTask(usize),
    #[error("batch for task {0} is empty")]
    EmptyBatch(usize),
    #[error("step {step} outside schedule of {total} steps")]
    StepOutOfRange { step: usize, total: usize },
    #[error("loss is not finite at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("no linear map named `{0}`")]
    UnknownTarget(String),
    #[error("`{0}` belongs to the frozen text encoder")]
    FrozenTarget(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Emb {
        path: PathBuf,
        source: EmbFormatError,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Similarity(#[from] unisim_core::SimilarityError),
    #[error(transparent)]
    Core(#[from] unisim_core::CoreError),
}

impl TrainError {
    pub(crate) fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn shape(
        context: &'static str,
        expected: impl ToString,
        got: impl ToString,
    ) -> Self {
        Self::Shape {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

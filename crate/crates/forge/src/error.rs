use std::path::PathBuf;

use thiserror::Error;
use unisim_core::{CoreError, Violation};

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("need at least {needed} entries, got {got}")]
    TooFewEntries { needed: usize, got: usize },

    #[error("best and worst entries share rank {0}")]
    TiedExtremes(f64),

    #[error("requested {requested} pairs but only {eligible} eligible pairs exist")]
    InsufficientPairs { requested: usize, eligible: u64 },

    #[error("gave up after {attempts} attempts with {found} of {requested} distinct pairs")]
    SamplingExhausted {
        requested: usize,
        found: usize,
        attempts: usize,
    },

    #[error("missing {0}")]
    MissingField(&'static str),

    #[error("odd-one-out needs {0}")]
    InsufficientClasses(String),

    #[error("macro-classes `{0}` and `{1}` share source class `{2}`")]
    OverlappingClasses(String, String, String),

    #[error("{path}:{line}: {message}")]
    Annotation {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown dataset `{name}`; supported: {}", supported.join(", "))]
    UnknownDataset {
        name: String,
        supported: Vec<&'static str>,
    },

    #[error(
        "built sample {index} of `{dataset}` is invalid: {}",
        render(violations)
    )]
    Invalid {
        dataset: String,
        index: usize,
        violations: Vec<Violation>,
    },

    #[error("no instruction template for task `{0}`")]
    TemplateMismatch(String),

    #[error(transparent)]
    Prompt(#[from] unisim_backends::PromptError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

fn render(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl ForgeError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| ForgeError::Io { path, source }
    }
}

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unisim_core::{ContentHash, CoreError, MediaItem, SimilarityError};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend `{backend}` failed on {items}: {message}")]
    Embed {
        backend: String,
        items: String,
        message: String,
    },

    #[error("backend `{backend}` returned {got} embeddings for {expected} items")]
    CountMismatch {
        backend: String,
        expected: usize,
        got: usize,
    },

    #[error("backend `{backend}` produced a {got}-dim embedding for {item}, expected {expected}")]
    DimMismatch {
        backend: String,
        item: String,
        expected: usize,
        got: usize,
    },

    #[error("backend `{backend}` produced a non-finite embedding for {item}")]
    NonFinite { backend: String, item: String },

    #[error("invalid backend id `{0}`: use letters, digits, `.`, `_` or `-`")]
    InvalidId(String),

    #[error("generative backend `{backend}` failed: {message}")]
    Generate { backend: String, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Similarity(#[from] SimilarityError),

    #[error("scoring mode `{mode}` does not apply to task `{task}`")]
    UnsupportedMode { mode: String, task: String },

    #[error("cache I/O at {path}: {source}")]
    CacheIo {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A dual encoder: images and texts land in the same `dim`-dimensional space.
///
/// Implementations return raw vectors in input order; the cache layer attaches
/// identity and persistence. Output must be deterministic per item content.
pub trait EncoderBackend: Send + Sync {
    fn backend_id(&self) -> &str;

    fn dim(&self) -> usize;

    /// `items` are all images.
    fn embed_images(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError>;

    /// `items` are all texts.
    fn embed_texts(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError>;
}

impl<T: EncoderBackend + ?Sized> EncoderBackend for std::sync::Arc<T> {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn embed_images(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        (**self).embed_images(items)
    }
    fn embed_texts(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        (**self).embed_texts(items)
    }
}

/// Backend-stamped embedding of one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub backend_id: String,
    pub item_hash: ContentHash,
    pub values: std::sync::Arc<[f32]>,
}

impl EmbeddingRecord {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Short human-readable identity for error messages.
pub(crate) fn describe_items(items: &[MediaItem]) -> String {
    const SHOWN: usize = 3;
    let mut names: Vec<String> = items
        .iter()
        .take(SHOWN)
        .map(|i| {
            let loc = i.locator();
            let short: String = loc.chars().take(60).collect();
            format!("{}:{short:?}", i.kind())
        })
        .collect();
    if items.len() > SHOWN {
        names.push(format!("... ({} items)", items.len()));
    }
    names.join(", ")
}

pub(crate) fn is_valid_backend_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

//! Content-addressed embedding cache.
//!
//! Layout: `<cache_dir>/<backend_id>/<item_hash>.emb`. Each file holds
//!
//! ```text
//! b"UEMB" | version: u32 LE (= 1) | dim: u32 LE | dim × f32 LE
//! ```
//!
//! Files are published with write-to-temp then rename, so readers never see a
//! partial record. Unreadable or malformed files are treated as misses and
//! rewritten.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;
use unisim_core::media::canonical_hash_in;
use unisim_core::{ContentHash, MediaItem, MediaKind};

use crate::encoder::{
    describe_items, is_valid_backend_id, BackendError, EmbeddingRecord, EncoderBackend,
};

pub const EMB_MAGIC: &[u8; 4] = b"UEMB";
pub const EMB_VERSION: u32 = 1;
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbFormatError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("payload is {got} bytes, header announces {expected}")]
    Length { expected: usize, got: usize },
    #[error("truncated header")]
    Truncated,
}

pub fn encode_emb(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * values.len());
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&EMB_VERSION.to_le_bytes());
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_emb(bytes: &[u8]) -> Result<Vec<f32>, EmbFormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(if bytes.len() >= 4 && &bytes[..4] != EMB_MAGIC {
            EmbFormatError::BadMagic
        } else {
            EmbFormatError::Truncated
        });
    }
    if &bytes[..4] != EMB_MAGIC {
        return Err(EmbFormatError::BadMagic);
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != EMB_VERSION {
        return Err(EmbFormatError::UnsupportedVersion(version));
    }
    let dim = word(8) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != dim * 4 {
        return Err(EmbFormatError::Length {
            expected: dim * 4,
            got: payload.len(),
        });
    }
    Ok(payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

type Key = (String, MediaKind, ContentHash);

/// Two-level (memory, disk) embedding cache shared by any number of backends.
///
/// Concurrent callers asking for the same missing items wait on a per-backend
/// lock; whoever holds it computes, the rest find the result on re-check.
pub struct EmbeddingCache {
    dir: Option<PathBuf>,
    media_root: Option<PathBuf>,
    memory: RwLock<HashMap<Key, Arc<[f32]>>>,
    hashes: RwLock<HashMap<MediaItem, ContentHash>>,
    compute_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl EmbeddingCache {
    /// Cache persisted under `dir`.
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self::build(Some(dir.into()))
    }

    /// Process-local cache with no disk layer.
    pub fn in_memory() -> Self {
        Self::build(None)
    }

    fn build(dir: Option<PathBuf>) -> Self {
        Self {
            dir,
            media_root: None,
            memory: RwLock::new(HashMap::new()),
            hashes: RwLock::new(HashMap::new()),
            compute_locks: Mutex::new(HashMap::new()),
        }
    }

    /// Resolve relative image paths against `root` when hashing.
    pub fn with_media_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.media_root = Some(root.into());
        self
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn entry_path(&self, backend_id: &str, hash: &ContentHash) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(backend_id).join(format!("{}.emb", hash.to_hex())))
    }

    pub fn item_hash(&self, item: &MediaItem) -> Result<ContentHash, BackendError> {
        if let Some(h) = self.hashes.read().unwrap().get(item) {
            return Ok(*h);
        }
        let h = canonical_hash_in(item, self.media_root.as_deref())?;
        self.hashes.write().unwrap().insert(item.clone(), h);
        Ok(h)
    }

    fn lookup_memory(&self, key: &Key) -> Option<Arc<[f32]>> {
        self.memory.read().unwrap().get(key).cloned()
    }

    fn lookup_disk(&self, backend_id: &str, hash: &ContentHash, dim: usize) -> Option<Arc<[f32]>> {
        let path = self.entry_path(backend_id, hash)?;
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!(
                    "unreadable cache entry {}: {e}; recomputing",
                    path.display()
                );
                return None;
            }
        };
        match decode_emb(&bytes) {
            Ok(v) if v.len() == dim && v.iter().all(|x| x.is_finite()) => Some(v.into()),
            Ok(v) => {
                log::warn!(
                    "cache entry {} has dim {} (expected {dim}) or non-finite values; recomputing",
                    path.display(),
                    v.len()
                );
                None
            }
            Err(e) => {
                log::warn!("corrupt cache entry {}: {e}; recomputing", path.display());
                None
            }
        }
    }

    fn store_disk(
        &self,
        backend_id: &str,
        hash: &ContentHash,
        values: &[f32],
    ) -> Result<(), BackendError> {
        let Some(path) = self.entry_path(backend_id, hash) else {
            return Ok(());
        };
        let parent = path.parent().expect("entry path has a parent");
        let io = |source| BackendError::CacheIo {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(parent).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io)?;
        tmp.write_all(&encode_emb(values)).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(())
    }

    fn compute_lock(&self, backend_id: &str) -> Arc<Mutex<()>> {
        self.compute_locks
            .lock()
            .unwrap()
            .entry(backend_id.to_string())
            .or_default()
            .clone()
    }

    fn resolve(&self, backend_id: &str, key: &Key, dim: usize) -> Option<Arc<[f32]>> {
        if let Some(v) = self.lookup_memory(key) {
            return Some(v);
        }
        let v = self.lookup_disk(backend_id, &key.2, dim)?;
        self.memory.write().unwrap().insert(key.clone(), v.clone());
        Some(v)
    }

    /// Embeddings for `items` in input order, encoding only what is in
    /// neither cache level.
    pub fn embed(
        &self,
        backend: &dyn EncoderBackend,
        items: &[MediaItem],
    ) -> Result<Vec<EmbeddingRecord>, BackendError> {
        let backend_id = backend.backend_id();
        if !is_valid_backend_id(backend_id) {
            return Err(BackendError::InvalidId(backend_id.to_string()));
        }
        let dim = backend.dim();
        let keys = items
            .iter()
            .map(|item| Ok((backend_id.to_string(), item.kind(), self.item_hash(item)?)))
            .collect::<Result<Vec<Key>, BackendError>>()?;

        let pending = |this: &Self| -> Vec<usize> {
            let mut seen = std::collections::HashSet::new();
            (0..items.len())
                .filter(|&i| {
                    seen.insert(&keys[i]) && this.resolve(backend_id, &keys[i], dim).is_none()
                })
                .collect()
        };

        if !pending(self).is_empty() {
            let lock = self.compute_lock(backend_id);
            let _guard = lock.lock().unwrap();
            // another caller may have filled these while we waited
            let misses = pending(self);
            for kind in [MediaKind::Image, MediaKind::Text] {
                let idx: Vec<usize> = misses
                    .iter()
                    .copied()
                    .filter(|&i| keys[i].1 == kind)
                    .collect();
                if idx.is_empty() {
                    continue;
                }
                let batch: Vec<MediaItem> = idx.iter().map(|&i| items[i].clone()).collect();
                let out = match kind {
                    MediaKind::Image => backend.embed_images(&batch),
                    MediaKind::Text => backend.embed_texts(&batch),
                }
                .map_err(|e| match e {
                    BackendError::Embed { .. } => e,
                    other => BackendError::Embed {
                        backend: backend_id.to_string(),
                        items: describe_items(&batch),
                        message: other.to_string(),
                    },
                })?;
                if out.len() != batch.len() {
                    return Err(BackendError::CountMismatch {
                        backend: backend_id.to_string(),
                        expected: batch.len(),
                        got: out.len(),
                    });
                }
                for (&i, values) in idx.iter().zip(out) {
                    let item_desc = || describe_items(std::slice::from_ref(&items[i]));
                    if values.len() != dim {
                        return Err(BackendError::DimMismatch {
                            backend: backend_id.to_string(),
                            item: item_desc(),
                            expected: dim,
                            got: values.len(),
                        });
                    }
                    if !values.iter().all(|x| x.is_finite()) {
                        return Err(BackendError::NonFinite {
                            backend: backend_id.to_string(),
                            item: item_desc(),
                        });
                    }
                    self.store_disk(backend_id, &keys[i].2, &values)?;
                    self.memory
                        .write()
                        .unwrap()
                        .insert(keys[i].clone(), values.into());
                }
            }
        }

        keys.into_iter()
            .map(|key| {
                let values = self
                    .lookup_memory(&key)
                    .expect("every requested item is resolved at this point");
                Ok(EmbeddingRecord {
                    backend_id: key.0,
                    item_hash: key.2,
                    values,
                })
            })
            .collect()
    }
}

/// One-shot form of [`EmbeddingCache::embed`] over a disk cache at `cache_dir`.
pub fn embed_cached(
    backend: &dyn EncoderBackend,
    items: &[MediaItem],
    cache_dir: &Path,
) -> Result<Vec<EmbeddingRecord>, BackendError> {
    EmbeddingCache::new(cache_dir).embed(backend, items)
}

/// A backend paired with the cache it reads through. Cheap to clone.
#[derive(Clone)]
pub struct CachedEncoder {
    backend: Arc<dyn EncoderBackend>,
    cache: Arc<EmbeddingCache>,
}

impl CachedEncoder {
    pub fn new(backend: Arc<dyn EncoderBackend>, cache: Arc<EmbeddingCache>) -> Self {
        Self { backend, cache }
    }

    pub fn backend_id(&self) -> &str {
        self.backend.backend_id()
    }

    pub fn dim(&self) -> usize {
        self.backend.dim()
    }

    pub fn embed(&self, items: &[MediaItem]) -> Result<Vec<EmbeddingRecord>, BackendError> {
        self.cache.embed(self.backend.as_ref(), items)
    }

    pub fn embed_one(&self, item: &MediaItem) -> Result<Arc<[f32]>, BackendError> {
        Ok(self.embed(std::slice::from_ref(item))?.remove(0).values)
    }
}

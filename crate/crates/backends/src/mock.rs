//! Deterministic in-process backends for tests and dry runs.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use unisim_core::{MediaItem, MediaKind};

use crate::encoder::{describe_items, BackendError, EncoderBackend};
use crate::generative::GenerativeBackend;

fn seed_of(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Pseudo-random embeddings derived from `(backend_id, kind, locator)`.
///
/// Distinct items get independent directions, so every decision made on
/// these embeddings behaves like a fair coin.
#[derive(Debug, Clone)]
pub struct HashEncoder {
    id: String,
    dim: usize,
}

impl HashEncoder {
    pub fn new(id: impl Into<String>, dim: usize) -> Self {
        Self { id: id.into(), dim }
    }

    pub fn vector(&self, item: &MediaItem) -> Vec<f32> {
        let kind = item.kind().to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(seed_of(&[
            self.id.as_bytes(),
            kind.as_bytes(),
            item.locator().as_bytes(),
        ]));
        loop {
            let v: Vec<f32> = (0..self.dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            if v.iter().any(|x| x.abs() > 1e-3) {
                return v;
            }
        }
    }
}

impl EncoderBackend for HashEncoder {
    fn backend_id(&self) -> &str {
        &self.id
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn embed_images(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        Ok(items.iter().map(|i| self.vector(i)).collect())
    }
    fn embed_texts(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        Ok(items.iter().map(|i| self.vector(i)).collect())
    }
}

/// Embeddings looked up from an explicit table; unknown items are an error.
#[derive(Debug, Clone, Default)]
pub struct TableEncoder {
    id: String,
    dim: usize,
    table: HashMap<MediaItem, Vec<f32>>,
}

impl TableEncoder {
    pub fn new(id: impl Into<String>, dim: usize) -> Self {
        Self {
            id: id.into(),
            dim,
            table: HashMap::new(),
        }
    }

    pub fn insert(&mut self, item: MediaItem, values: Vec<f32>) -> &mut Self {
        assert_eq!(values.len(), self.dim, "table entry has wrong dimension");
        self.table.insert(item, values);
        self
    }

    pub fn with(mut self, item: MediaItem, values: Vec<f32>) -> Self {
        self.insert(item, values);
        self
    }

    fn lookup(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        items
            .iter()
            .map(|i| {
                self.table
                    .get(i)
                    .cloned()
                    .ok_or_else(|| BackendError::Embed {
                        backend: self.id.clone(),
                        items: describe_items(std::slice::from_ref(i)),
                        message: "no table entry".into(),
                    })
            })
            .collect()
    }
}

impl EncoderBackend for TableEncoder {
    fn backend_id(&self) -> &str {
        &self.id
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn embed_images(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        self.lookup(items)
    }
    fn embed_texts(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        self.lookup(items)
    }
}

/// Wraps a backend and counts invocations.
#[derive(Debug)]
pub struct CountingEncoder<E> {
    inner: E,
    calls: AtomicUsize,
    items: AtomicUsize,
}

impl<E> CountingEncoder<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
            items: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn items_encoded(&self) -> usize {
        self.items.load(Ordering::SeqCst)
    }

    fn record(&self, n: usize) {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.items.fetch_add(n, Ordering::SeqCst);
    }
}

impl<E: EncoderBackend> EncoderBackend for CountingEncoder<E> {
    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn embed_images(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        self.record(items.len());
        self.inner.embed_images(items)
    }
    fn embed_texts(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        self.record(items.len());
        self.inner.embed_texts(items)
    }
}

/// Fails on every item of the given kind.
#[derive(Debug, Clone)]
pub struct FailingEncoder {
    pub id: String,
    pub dim: usize,
    pub fail_on: MediaKind,
}

impl EncoderBackend for FailingEncoder {
    fn backend_id(&self) -> &str {
        &self.id
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn embed_images(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        if self.fail_on == MediaKind::Image {
            return Err(BackendError::Embed {
                backend: self.id.clone(),
                items: describe_items(items),
                message: "scripted failure".into(),
            });
        }
        Ok(items.iter().map(|_| vec![1.0; self.dim]).collect())
    }
    fn embed_texts(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        if self.fail_on == MediaKind::Text {
            return Err(BackendError::Embed {
                backend: self.id.clone(),
                items: describe_items(items),
                message: "scripted failure".into(),
            });
        }
        Ok(items.iter().map(|_| vec![1.0; self.dim]).collect())
    }
}

/// Replays a fixed list of answers, then repeats the last one.
#[derive(Debug)]
pub struct ScriptedGenerative {
    id: String,
    answers: Mutex<VecDeque<String>>,
    last: Mutex<String>,
}

impl ScriptedGenerative {
    pub fn new(
        id: impl Into<String>,
        answers: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Self {
            id: id.into(),
            answers: Mutex::new(answers.into_iter().map(Into::into).collect()),
            last: Mutex::new(String::new()),
        }
    }
}

impl GenerativeBackend for ScriptedGenerative {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn answer(&self, _instruction: &str, _images: &[MediaItem]) -> Result<String, BackendError> {
        let mut last = self.last.lock().unwrap();
        if let Some(next) = self.answers.lock().unwrap().pop_front() {
            *last = next;
        }
        Ok(last.clone())
    }
}

/// Answers with a pseudo-random option letter derived from the request, so
/// repeated runs agree while distinct requests look like guessing.
#[derive(Debug, Clone)]
pub struct RandomGenerative {
    id: String,
    options: usize,
}

impl RandomGenerative {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            options: 2,
        }
    }
}

impl GenerativeBackend for RandomGenerative {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn answer(&self, instruction: &str, images: &[MediaItem]) -> Result<String, BackendError> {
        let mut parts: Vec<&[u8]> = vec![self.id.as_bytes(), instruction.as_bytes()];
        parts.extend(images.iter().map(|i| i.locator().as_bytes()));
        let n = if instruction.contains("(C)") {
            3
        } else {
            self.options
        };
        let pick = (seed_of(&parts) % n as u64) as u8;
        Ok(format!("({})", (b'A' + pick) as char))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_encoder_is_deterministic_and_backend_specific() {
        let a = HashEncoder::new("a", 16);
        let item = MediaItem::image("x.png");
        assert_eq!(a.vector(&item), a.vector(&item));
        assert_ne!(a.vector(&item), HashEncoder::new("b", 16).vector(&item));
        assert_ne!(a.vector(&item), a.vector(&MediaItem::text("x.png")));
    }

    #[test]
    fn table_encoder_reports_missing_items() {
        let t = TableEncoder::new("t", 2).with(MediaItem::text("a"), vec![1.0, 0.0]);
        assert_eq!(
            t.embed_texts(&[MediaItem::text("a")]).unwrap(),
            vec![vec![1.0, 0.0]]
        );
        let err = t.embed_texts(&[MediaItem::text("b")]).unwrap_err();
        assert!(err.to_string().contains("\"b\""), "{err}");
    }

    #[test]
    fn scripted_answers_replay() {
        let g = ScriptedGenerative::new("g", ["(A)", "(B)"]);
        let ask = || g.answer("q", &[]).unwrap();
        assert_eq!(ask(), "(A)");
        assert_eq!(ask(), "(B)");
        assert_eq!(ask(), "(B)");
    }
}

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Image,
    Text,
}

impl fmt::Display for MediaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MediaKind::Image => f.write_str("image"),
            MediaKind::Text => f.write_str("text"),
        }
    }
}

/// One image (referenced by URI or path) or one inline text snippet.
///
/// Serialized as `{"kind":"image","uri":...}` or `{"kind":"text","text":...}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MediaItem {
    Image { uri: String },
    Text { text: String },
}

impl MediaItem {
    pub fn image(uri: impl Into<String>) -> Self {
        MediaItem::Image { uri: uri.into() }
    }

    pub fn text(text: impl Into<String>) -> Self {
        MediaItem::Text { text: text.into() }
    }

    pub fn kind(&self) -> MediaKind {
        match self {
            MediaItem::Image { .. } => MediaKind::Image,
            MediaItem::Text { .. } => MediaKind::Text,
        }
    }

    pub fn is_image(&self) -> bool {
        matches!(self, MediaItem::Image { .. })
    }

    pub fn is_text(&self) -> bool {
        matches!(self, MediaItem::Text { .. })
    }

    /// The URI for images, the inline content for texts.
    pub fn locator(&self) -> &str {
        match self {
            MediaItem::Image { uri } => uri,
            MediaItem::Text { text } => text,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            MediaItem::Text { text } => Some(text),
            MediaItem::Image { .. } => None,
        }
    }

    /// URI scheme of an image other than `file`, e.g. `https` or `mem`.
    pub fn remote_scheme(&self) -> Option<&str> {
        let MediaItem::Image { uri } = self else {
            return None;
        };
        let (scheme, _) = uri.split_once("://")?;
        let valid = !scheme.is_empty()
            && scheme
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
        (valid && scheme != "file").then_some(scheme)
    }

    /// Filesystem path of an image, resolved against `base` when relative.
    /// `None` for texts and for images behind a non-file URI scheme.
    pub fn image_path(&self, base: Option<&Path>) -> Option<PathBuf> {
        let MediaItem::Image { uri } = self else {
            return None;
        };
        if self.remote_scheme().is_some() {
            return None;
        }
        let raw = uri.strip_prefix("file://").unwrap_or(uri);
        let path = Path::new(raw);
        Some(match base {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        })
    }
}

/// SHA-256 digest identifying the canonical content of a [`MediaItem`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentHash([u8; 32]);

impl ContentHash {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Digest of arbitrary bytes, used for image payloads.
    pub fn of_bytes(bytes: &[u8]) -> Self {
        Self(Sha256::digest(bytes).into())
    }

    /// Digest of text after NFC normalization and trailing-whitespace removal.
    pub fn of_text(text: &str) -> Self {
        Self::of_bytes(normalize_text(text).as_bytes())
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", self.to_hex())
    }
}

impl FromStr for ContentHash {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| CoreError::InvalidHash(s.to_string()))?;
        Ok(Self(out))
    }
}

impl Serialize for ContentHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn normalize_text(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.trim_end().to_string()
}

/// Content digest of an item. Relative image paths resolve against the
/// current directory; see [`canonical_hash_in`] for an explicit root.
/// Images behind a non-file URI scheme are identified by their URI.
pub fn canonical_hash(item: &MediaItem) -> Result<ContentHash, CoreError> {
    canonical_hash_in(item, None)
}

pub fn canonical_hash_in(item: &MediaItem, base: Option<&Path>) -> Result<ContentHash, CoreError> {
    match item {
        MediaItem::Text { text } => Ok(ContentHash::of_text(text)),
        MediaItem::Image { uri } if item.remote_scheme().is_some() => {
            let mut bytes = b"uri\0".to_vec();
            bytes.extend_from_slice(uri.as_bytes());
            Ok(ContentHash::of_bytes(&bytes))
        }
        MediaItem::Image { .. } => {
            let path = item.image_path(base).expect("local image item has a path");
            let bytes = std::fs::read(&path).map_err(|source| CoreError::Io { path, source })?;
            Ok(ContentHash::of_bytes(&bytes))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remote_images_hash_by_uri() {
        let a = MediaItem::image("https://example.org/a.png");
        assert_eq!(a.remote_scheme(), Some("https"));
        assert_eq!(a.image_path(None), None);
        assert_eq!(
            canonical_hash(&a).unwrap(),
            canonical_hash(&a.clone()).unwrap()
        );
        assert_ne!(
            canonical_hash(&a).unwrap(),
            canonical_hash(&MediaItem::image("https://example.org/b.png")).unwrap()
        );
        assert_eq!(MediaItem::image("file:///x.png").remote_scheme(), None);
        assert_eq!(MediaItem::image("c:/x.png").remote_scheme(), None);
    }

    #[test]
    fn text_hash_is_deterministic() {
        let a = canonical_hash(&MediaItem::text("a")).unwrap();
        let b = canonical_hash(&MediaItem::text("a")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trailing_whitespace_is_ignored() {
        let a = canonical_hash(&MediaItem::text("a")).unwrap();
        let b = canonical_hash(&MediaItem::text("a ")).unwrap();
        let c = canonical_hash(&MediaItem::text("a\n\t")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        // leading whitespace is content
        assert_ne!(a, canonical_hash(&MediaItem::text(" a")).unwrap());
    }

    #[test]
    fn nfc_equivalent_texts_share_digest() {
        let composed = "caf\u{e9}";
        let decomposed = "cafe\u{301}";
        assert_ne!(composed, decomposed);
        assert_eq!(
            ContentHash::of_text(composed),
            ContentHash::of_text(decomposed)
        );
    }

    #[test]
    fn distinct_image_files_hash_differently() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.png"), [0x89, b'P', b'N', b'G', 1]).unwrap();
        std::fs::write(dir.path().join("b.png"), [0x89, b'P', b'N', b'G', 2]).unwrap();
        let a = canonical_hash_in(&MediaItem::image("a.png"), Some(dir.path())).unwrap();
        let b = canonical_hash_in(&MediaItem::image("b.png"), Some(dir.path())).unwrap();
        assert_ne!(a, b);
        let again = canonical_hash_in(&MediaItem::image("a.png"), Some(dir.path())).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn file_uri_prefix_is_stripped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jpg");
        std::fs::write(&path, b"pixels").unwrap();
        let uri = format!("file://{}", path.display());
        let h = canonical_hash(&MediaItem::image(uri)).unwrap();
        assert_eq!(h, ContentHash::of_bytes(b"pixels"));
    }

    #[test]
    fn unreadable_image_is_io_error() {
        let err = canonical_hash(&MediaItem::image("/definitely/not/here.png")).unwrap_err();
        assert!(matches!(err, CoreError::Io { .. }));
    }

    #[test]
    fn hash_hex_round_trip() {
        let h = ContentHash::of_text("hello");
        let parsed: ContentHash = h.to_hex().parse().unwrap();
        assert_eq!(h, parsed);
        assert!("zz".parse::<ContentHash>().is_err());
    }

    #[test]
    fn media_item_wire_format() {
        let img = MediaItem::image("imgs/0.png");
        assert_eq!(
            serde_json::to_string(&img).unwrap(),
            r#"{"kind":"image","uri":"imgs/0.png"}"#
        );
        let txt: MediaItem = serde_json::from_str(r#"{"kind":"text","text":"a cat"}"#).unwrap();
        assert_eq!(txt, MediaItem::text("a cat"));
    }
}

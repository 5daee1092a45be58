//! Canonical data model for multi-modal perceptual similarity tasks.
//!
//! Every dataset, whatever its raw layout, is normalized into one of three
//! line-delimited JSON records: a [`TripletSample`] (the universal 2AFC unit),
//! an [`OddOneOutSample`] or a [`RetrievalSplit`]. The [`similarity`] module
//! holds the pure decision rules applied to embedding similarities.

pub mod error;
pub mod media;
pub mod sample;
pub mod similarity;
pub mod task;
pub mod validate;

pub use error::CoreError;
pub use media::{canonical_hash, ContentHash, MediaItem, MediaKind};
pub use sample::{
    read_jsonl, write_jsonl, Difficulty, OddOneOutSample, QueryRelevance, Relevance,
    RetrievalSplit, Sample, TripletSample, OOO_SCHEMA, RETRIEVAL_SCHEMA, TRIPLET_SCHEMA,
};
pub use similarity::{SimilarityError, SimilarityScore, TiePolicy};
pub use task::{PerceptualAttribute, TaskFamily, TaskKind};
pub use validate::{validate_sample, Violation};

/// Reference text that completes IQA triplets.
pub const IQA_REFERENCE_PROMPT: &str = "A high quality photo.";

/// Reference text for PAA triplets, phrased like [`IQA_REFERENCE_PROMPT`].
pub fn paa_reference_prompt(attribute: PerceptualAttribute) -> &'static str {
    match attribute {
        PerceptualAttribute::Brightness => "A bright photo.",
        PerceptualAttribute::Colorfulness => "A colorful photo.",
        PerceptualAttribute::Contrast => "A high contrast photo.",
        PerceptualAttribute::Sharpness => "A sharp photo.",
    }
}

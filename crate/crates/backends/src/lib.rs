//! Backend contracts for perceptual similarity evaluation.
//!
//! Encoder backends map images and texts into a shared embedding space;
//! generative backends answer multiple-choice instructions. The
//! [`EmbeddingCache`] makes sure each distinct item is encoded once per
//! backend, in memory and on disk.

pub mod cache;
pub mod encoder;
pub mod generative;
pub mod mock;
pub mod process;
pub mod prompt;
pub mod scoring;

pub use cache::{embed_cached, CachedEncoder, EmbFormatError, EmbeddingCache};
pub use encoder::{BackendError, EmbeddingRecord, EncoderBackend};
pub use generative::{GenerateRequest, GenerateResponse, GenerativeBackend, ImagePayload};
pub use prompt::{
    default_template, option_labels, parse_choice, parse_choice_with, render_prompt,
    ParseChoiceError, PromptError, PromptTemplate, RenderedPrompt,
};
pub use scoring::{
    decide_sample_encoder, prompt_pair, score_sample_encoder, supports_prompt_pair, ScoringMode,
};

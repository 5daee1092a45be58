//! Dataset construction: raw annotations in, canonical samples out.
//!
//! [`ingest_dataset`] dispatches on a dataset id to the builders in
//! [`builders`]; every build is deterministic under its seed and validated
//! before it is written.

pub mod annotate;
pub mod builders;
pub mod error;
pub mod ingest;
pub mod nafc;
pub mod pairs;
pub mod types;

pub use annotate::{emit_instruction_annotations, AnnotationRecord, InstructionTemplates};
pub use builders::{
    build_adjacent_severity, build_caption_negatives, build_fused_caption_pairs,
    build_grouped_score_pairs, build_hqedit_pair, build_ooo_triplets, build_preference_pair,
    build_pristine_vs_distorted, build_rank_extremes, build_ranked_pairs, build_score_pairs,
    reshuffle_ooo, EditPairSamples, ScoredPool, Target,
};
pub use error::ForgeError;
pub use ingest::{
    build_dataset, check_ground_truth, ingest_dataset, load_ranked_groups, manifest_path,
    samples_path, supported_datasets, IngestOptions, Manifest, BUILDER_VERSION,
};
pub use nafc::{build_nafc_instances, NafcBuild, NafcInstance};
pub use types::{MacroClassMap, RankOrder, RankedGroup, SeverityLadder};

use serde::{Deserialize, Serialize};
use unisim_core::similarity::{cosine_sim, decide_2afc, iqa_prompt_pair_score};
use unisim_core::{
    MediaItem, PerceptualAttribute, SimilarityError, SimilarityScore, TaskFamily, TaskKind,
    TiePolicy, TripletSample,
};

use crate::cache::CachedEncoder;
use crate::encoder::BackendError;

pub const DEFAULT_TAU: f64 = 100.0;

/// How an encoder scores the two candidates of a triplet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ScoringMode {
    /// Cosine similarity of each candidate to the reference item.
    Reference,
    /// Softmax weight of a "good" prompt against an opposite prompt, per
    /// candidate. Only defined for IQA and PAA.
    PromptPair { tau: f64 },
}

impl ScoringMode {
    pub fn prompt_pair() -> Self {
        ScoringMode::PromptPair { tau: DEFAULT_TAU }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoringMode::Reference => "reference",
            ScoringMode::PromptPair { .. } => "prompt_pair",
        }
    }
}

/// Good and bad prompts for the prompt-pair path.
pub fn prompt_pair(task: TaskKind) -> Option<(&'static str, &'static str)> {
    match task {
        TaskKind::Iqa => Some(("Good photo.", "Bad photo.")),
        TaskKind::Paa(a) => Some(match a {
            PerceptualAttribute::Brightness => ("Bright photo.", "Dark photo."),
            PerceptualAttribute::Colorfulness => ("Colorful photo.", "Dull photo."),
            PerceptualAttribute::Contrast => ("High contrast photo.", "Low contrast photo."),
            PerceptualAttribute::Sharpness => ("Sharp photo.", "Blurry photo."),
        }),
        _ => None,
    }
}

pub fn supports_prompt_pair(task: TaskKind) -> bool {
    matches!(task.family(), TaskFamily::Iqa | TaskFamily::Paa)
}

/// Scores `(s0, s1)` for the two candidates of `s`.
pub fn score_sample_encoder(
    encoder: &CachedEncoder,
    s: &TripletSample,
    mode: ScoringMode,
) -> Result<(SimilarityScore, SimilarityScore), BackendError> {
    match mode {
        ScoringMode::Reference => {
            let recs =
                encoder.embed(&[s.reference.clone(), s.cand[0].clone(), s.cand[1].clone()])?;
            let s0 = cosine_sim(&recs[0].values, &recs[1].values)?;
            let s1 = cosine_sim(&recs[0].values, &recs[2].values)?;
            Ok((s0, s1))
        }
        ScoringMode::PromptPair { tau } => {
            let (good, bad) = prompt_pair(s.task).ok_or_else(|| BackendError::UnsupportedMode {
                mode: mode.name().into(),
                task: s.task.to_string(),
            })?;
            let recs = encoder.embed(&[
                s.cand[0].clone(),
                s.cand[1].clone(),
                MediaItem::text(good),
                MediaItem::text(bad),
            ])?;
            let score = |c: usize| -> Result<SimilarityScore, BackendError> {
                let g = cosine_sim(&recs[c].values, &recs[2].values)?;
                let b = cosine_sim(&recs[c].values, &recs[3].values)?;
                Ok(SimilarityScore::new(iqa_prompt_pair_score(g, b, tau)?)?)
            };
            Ok((score(0)?, score(1)?))
        }
    }
}

/// Index of the candidate `s` prefers. Prompt-pair candidates compare on
/// `s_good - s_bad`: the softmax weight is a strictly increasing function of
/// it for every `tau > 0`, but rounds to 1.0 once `tau * (s_good - s_bad)`
/// exceeds about 37.
pub fn decide_sample_encoder(
    encoder: &CachedEncoder,
    s: &TripletSample,
    mode: ScoringMode,
    tie: TiePolicy,
) -> Result<usize, BackendError> {
    let (k0, k1) = match mode {
        ScoringMode::Reference => score_sample_encoder(encoder, s, mode)?,
        ScoringMode::PromptPair { tau } => {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(SimilarityError::InvalidTemperature(tau).into());
            }
            let (good, bad) = prompt_pair(s.task).ok_or_else(|| BackendError::UnsupportedMode {
                mode: mode.name().into(),
                task: s.task.to_string(),
            })?;
            let recs = encoder.embed(&[
                s.cand[0].clone(),
                s.cand[1].clone(),
                MediaItem::text(good),
                MediaItem::text(bad),
            ])?;
            let key = |c: usize| -> Result<SimilarityScore, BackendError> {
                let g = cosine_sim(&recs[c].values, &recs[2].values)?.value();
                let b = cosine_sim(&recs[c].values, &recs[3].values)?.value();
                Ok(SimilarityScore::new((g - b) / 2.0)?)
            };
            (key(0)?, key(1)?)
        }
    };
    Ok(decide_2afc(k0, k1, tie)?)
}

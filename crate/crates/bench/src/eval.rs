//! Per-dataset evaluation: 2AFC, odd-one-out, N-alternative choice and
//! retrieval.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unisim_backends::{
    decide_sample_encoder, default_template, option_labels, parse_choice_with, render_prompt,
    CachedEncoder, GenerativeBackend, ScoringMode,
};
use unisim_core::similarity::{cosine_sim, decide_nafc, decide_ooo};
use unisim_core::{
    Difficulty, OddOneOutSample, Relevance, RetrievalSplit, Sample, TiePolicy, TripletSample,
};
use unisim_forge::{build_nafc_instances, NafcInstance, RankedGroup};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Choice(usize),
    /// A generative answer that named no option; counted as wrong.
    Unparseable,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
    pub unparseable: usize,
}

impl Tally {
    pub fn record(&mut self, d: Decision, truth: usize) {
        self.total += 1;
        match d {
            Decision::Choice(c) => self.correct += (c == truth) as usize,
            Decision::Unparseable => self.unparseable += 1,
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn unparseable_rate(&self) -> f64 {
        self.unparseable as f64 / self.total as f64
    }
}

pub fn eval_2afc(
    samples: &[TripletSample],
    mut decide: impl FnMut(&TripletSample) -> Result<Decision, BenchError>,
) -> Result<Tally, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::Empty("triplets"));
    }
    let mut tally = Tally::default();
    for s in samples {
        tally.record(decide(s)?, s.label as usize);
    }
    Ok(tally)
}

pub fn eval_ooo(
    samples: &[OddOneOutSample],
    mut decide: impl FnMut(&OddOneOutSample) -> Result<Decision, BenchError>,
) -> Result<Tally, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::Empty("odd-one-out samples"));
    }
    let mut tally = Tally::default();
    for s in samples {
        tally.record(decide(s)?, s.odd as usize);
    }
    Ok(tally)
}

pub fn encoder_2afc(
    enc: &CachedEncoder,
    s: &TripletSample,
    mode: ScoringMode,
    tie: TiePolicy,
) -> Result<Decision, BenchError> {
    Ok(Decision::Choice(decide_sample_encoder(enc, s, mode, tie)?))
}

pub fn encoder_ooo(enc: &CachedEncoder, s: &OddOneOutSample) -> Result<Decision, BenchError> {
    let recs = enc.embed(&s.items)?;
    let mut sim = [[1.0; 3]; 3];
    for i in 0..3 {
        for j in (i + 1)..3 {
            let v = cosine_sim(&recs[i].values, &recs[j].values)?.value();
            sim[i][j] = v;
            sim[j][i] = v;
        }
    }
    Ok(Decision::Choice(decide_ooo(&sim)?))
}

/// Renders the task's instruction, asks the model and parses its answer.
pub fn generative_choice(
    backend: &dyn GenerativeBackend,
    s: &Sample,
) -> Result<Decision, BenchError> {
    let task = s.task();
    let template = default_template(task)
        .ok_or_else(|| BenchError::Config(format!("no instruction template for task {task}")))?;
    let rendered = render_prompt(&template, s)?;
    let raw = backend.answer(&rendered.instruction, &rendered.images)?;
    Ok(match parse_choice_with(&raw, &option_labels(task)) {
        Ok(i) => Decision::Choice(i),
        Err(_) => Decision::Unparseable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NafcPoint {
    pub n: usize,
    pub tally: Tally,
    /// Groups too small for `n` alternatives or without a unique best entry.
    pub skipped_groups: usize,
}

/// For each `n`, builds one instance per eligible group (seeded per `n`)
/// and scores it.
pub fn eval_nafc(
    groups: &[RankedGroup],
    dataset: &str,
    n_range: RangeInclusive<usize>,
    seed: u64,
    mut decide: impl FnMut(&NafcInstance) -> Result<Decision, BenchError>,
) -> Result<Vec<NafcPoint>, BenchError> {
    if *n_range.start() < 2 || n_range.is_empty() {
        return Err(BenchError::Config(format!(
            "invalid alternative range {n_range:?}"
        )));
    }
    let mut out = Vec::new();
    for n in n_range {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        let build = build_nafc_instances(groups, n, dataset, &mut rng);
        let mut tally = Tally::default();
        for inst in &build.instances {
            tally.record(decide(inst)?, inst.correct);
        }
        out.push(NafcPoint {
            n,
            tally,
            skipped_groups: build.skipped,
        });
    }
    Ok(out)
}

pub fn encoder_nafc(
    enc: &CachedEncoder,
    inst: &NafcInstance,
    tie: TiePolicy,
) -> Result<Decision, BenchError> {
    let mut items = Vec::with_capacity(inst.alternatives.len() + 1);
    items.push(inst.reference.clone());
    items.extend(inst.alternatives.iter().cloned());
    let recs = enc.embed(&items)?;
    let scores = recs[1..]
        .iter()
        .map(|r| cosine_sim(&recs[0].values, &r.values))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Decision::Choice(decide_nafc(&scores, tie)?))
}

/// Average precision of `ranking` (gallery indices, best first) after
/// dropping junk; `None` when there are no positives.
pub fn average_precision(ranking: &[usize], rel: &Relevance) -> Option<f64> {
    let positives: BTreeSet<usize> = rel.positives.iter().copied().collect();
    if positives.is_empty() {
        return None;
    }
    let junk: BTreeSet<usize> = rel.junk.iter().copied().collect();
    let (mut rank, mut hits, mut sum) = (0usize, 0usize, 0.0);
    for g in ranking.iter().filter(|g| !junk.contains(g)) {
        rank += 1;
        if positives.contains(g) {
            hits += 1;
            sum += hits as f64 / rank as f64;
        }
    }
    Some(sum / positives.len() as f64)
}

/// Gallery indices by decreasing similarity; equal scores keep index order.
pub fn rank_by_similarity(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalScore {
    pub map: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Mean AP over queries that have positives at `difficulty`.
pub fn mean_average_precision(
    rankings: &[Vec<usize>],
    split: &RetrievalSplit,
    difficulty: Difficulty,
) -> Result<RetrievalScore, BenchError> {
    let mut aps = Vec::with_capacity(rankings.len());
    for (ranking, rel) in rankings.iter().zip(&split.relevance) {
        if let Some(ap) = average_precision(ranking, rel.at(difficulty)) {
            aps.push(ap);
        }
    }
    if aps.is_empty() {
        return Err(BenchError::AllQueriesSkipped(split.dataset.clone()));
    }
    Ok(RetrievalScore {
        map: aps.iter().sum::<f64>() / aps.len() as f64,
        evaluated: aps.len(),
        skipped: rankings.len() - aps.len(),
    })
}

/// Rankings of the gallery for every query, by cosine similarity.
pub fn encoder_rankings(
    enc: &CachedEncoder,
    split: &RetrievalSplit,
) -> Result<Vec<Vec<usize>>, BenchError> {
    let gallery = enc.embed(&split.gallery)?;
    let queries = enc.embed(&split.queries)?;
    queries
        .iter()
        .map(|q| {
            let scores = gallery
                .iter()
                .map(|g| cosine_sim(&q.values, &g.values).map(|s| s.value()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(rank_by_similarity(&scores))
        })
        .collect()
}

pub fn eval_retrieval(
    split: &RetrievalSplit,
    enc: &CachedEncoder,
    difficulty: Difficulty,
) -> Result<RetrievalScore, BenchError> {
    mean_average_precision(&encoder_rankings(enc, split)?, split, difficulty)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(positives: &[usize], junk: &[usize]) -> Relevance {
        Relevance {
            positives: positives.to_vec(),
            junk: junk.to_vec(),
        }
    }

    #[test]
    fn hand_average_precision() {
        assert_eq!(
            average_precision(&[0, 1, 2, 3], &rel(&[0, 1], &[])),
            Some(1.0)
        );
        let ap = average_precision(&[7, 4, 9, 1, 2], &rel(&[7, 9], &[])).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        // junk at rank 2 is removed before scoring
        assert_eq!(
            average_precision(&[7, 5, 4, 9, 1, 2], &rel(&[7, 9], &[5])),
            Some(ap)
        );
        assert_eq!(average_precision(&[0, 1], &rel(&[], &[1])), None);
    }

    #[test]
    fn tally_counts_unparseable_as_wrong() {
        let mut t = Tally::default();
        for (d, y) in [
            (Decision::Choice(0), 0),
            (Decision::Choice(1), 0),
            (Decision::Unparseable, 1),
            (Decision::Choice(1), 1),
        ] {
            t.record(d, y);
        }
        assert_eq!((t.correct, t.total, t.unparseable), (2, 4, 1));
        assert_eq!((t.accuracy(), t.unparseable_rate()), (0.5, 0.25));
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        assert_eq!(rank_by_similarity(&[0.5, 0.9, 0.5, -1.0]), vec![1, 0, 2, 3]);
    }
}

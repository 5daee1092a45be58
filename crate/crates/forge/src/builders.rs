//! Construction rules turning raw annotations into canonical samples.
//!
//! Every builder places the two candidates in a seeded-random order and
//! stores the preferred candidate's locator under `meta.preferred`, so the
//! label can always be re-derived from the ground truth.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};
use unisim_core::{MediaItem, OddOneOutSample, TaskKind, TripletSample, IQA_REFERENCE_PROMPT};

use crate::error::ForgeError;
use crate::pairs::PairSampler;
use crate::types::{MacroClassMap, RankedGroup, SeverityLadder};

/// Task and dataset stamped onto built samples.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub task: TaskKind,
    pub dataset: &'a str,
}

impl<'a> Target<'a> {
    pub fn new(task: TaskKind, dataset: &'a str) -> Self {
        Self { task, dataset }
    }
}

/// Triplet with `preferred` and `other` in random order. `values` are the
/// ground-truth numbers of (preferred, other) and are stored in candidate order.
pub fn ordered_triplet(
    target: Target,
    reference: MediaItem,
    preferred: MediaItem,
    other: MediaItem,
    values: Option<(&str, Value, Value)>,
    rng: &mut impl Rng,
) -> TripletSample {
    let swap = rng.gen_bool(0.5);
    let locator = preferred.locator().to_string();
    let (cand, label) = if swap {
        ([other, preferred], 1)
    } else {
        ([preferred, other], 0)
    };
    let mut s = TripletSample::new(target.task, target.dataset, reference, cand, label)
        .with_meta("preferred", locator);
    if let Some((key, p, o)) = values {
        let v = if swap { json!([o, p]) } else { json!([p, o]) };
        s = s.with_meta(key, v);
    }
    s
}

fn iqa_reference() -> MediaItem {
    MediaItem::text(IQA_REFERENCE_PROMPT)
}

/// Best- against worst-ranked entry of a group, with the prompt as reference.
pub fn build_rank_extremes(
    g: &RankedGroup,
    target: Target,
    rng: &mut impl Rng,
) -> Result<TripletSample, ForgeError> {
    if g.entries.len() < 2 {
        return Err(ForgeError::TooFewEntries {
            needed: 2,
            got: g.entries.len(),
        });
    }
    let (b, w) = (g.best().unwrap(), g.worst().unwrap());
    let (best, worst) = (&g.entries[b], &g.entries[w]);
    if g.utility(best.1) == g.utility(worst.1) {
        return Err(ForgeError::TiedExtremes(best.1));
    }
    Ok(ordered_triplet(
        target,
        MediaItem::text(g.prompt.clone()),
        best.0.clone(),
        worst.0.clone(),
        Some(("ranks", json!(best.1), json!(worst.1))),
        rng,
    ))
}

/// `n` random pairs drawn across groups (never mixing two groups), each
/// labeled by the better rank or score. The prompt of the group is the reference.
pub fn build_ranked_pairs(
    groups: &[RankedGroup],
    n: usize,
    target: Target,
    rng: &mut impl Rng,
) -> Result<Vec<TripletSample>, ForgeError> {
    let utilities: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| g.entries.iter().map(|(_, v)| g.utility(*v)).collect())
        .collect();
    let pairs = PairSampler::new(&utilities, 0.0).sample(n, rng)?;
    Ok(pairs
        .into_iter()
        .map(|p| {
            let g = &groups[p.group];
            let (better, worse) = (&g.entries[p.better], &g.entries[p.worse]);
            let key = match g.ordering {
                crate::types::RankOrder::RankAscendingBest => "ranks",
                crate::types::RankOrder::ScoreHigherBetter => "scores",
            };
            ordered_triplet(
                target,
                MediaItem::text(g.prompt.clone()),
                better.0.clone(),
                worse.0.clone(),
                Some((key, json!(better.1), json!(worse.1))),
                rng,
            )
        })
        .collect())
}

/// A pool of scored items sharing one reference item.
#[derive(Debug, Clone)]
pub struct ScoredPool {
    pub reference: MediaItem,
    pub items: Vec<(MediaItem, f64)>,
}

/// `n` distinct random pairs with score difference above `min_gap`, drawn
/// across pools (never mixing two pools). The higher score is preferred.
pub fn build_grouped_score_pairs(
    pools: &[ScoredPool],
    n: usize,
    min_gap: f64,
    target: Target,
    rng: &mut impl Rng,
) -> Result<Vec<TripletSample>, ForgeError> {
    let scores: Vec<Vec<f64>> = pools
        .iter()
        .map(|p| p.items.iter().map(|(_, s)| *s).collect())
        .collect();
    let pairs = PairSampler::new(&scores, min_gap).sample(n, rng)?;
    Ok(pairs
        .into_iter()
        .map(|p| {
            let pool = &pools[p.group];
            let (better, worse) = (&pool.items[p.better], &pool.items[p.worse]);
            ordered_triplet(
                target,
                pool.reference.clone(),
                better.0.clone(),
                worse.0.clone(),
                Some(("scores", json!(better.1), json!(worse.1))),
                rng,
            )
        })
        .collect())
}

/// Score pairs from one pool against the fixed quality prompt.
pub fn build_score_pairs(
    pool: &[(MediaItem, f64)],
    n: usize,
    min_gap: f64,
    target: Target,
    rng: &mut impl Rng,
) -> Result<Vec<TripletSample>, ForgeError> {
    if pool.len() < 2 {
        return Err(ForgeError::TooFewEntries {
            needed: 2,
            got: pool.len(),
        });
    }
    let reference = match target.task {
        TaskKind::Paa(a) => MediaItem::text(unisim_core::paa_reference_prompt(a)),
        _ => iqa_reference(),
    };
    let pools = [ScoredPool {
        reference,
        items: pool.to_vec(),
    }];
    build_grouped_score_pairs(&pools, n, min_gap, target, rng)
}

/// Consecutive severity levels of one corruption; the milder one is preferred.
pub fn build_adjacent_severity(
    l: &SeverityLadder,
    dataset: &str,
    rng: &mut impl Rng,
) -> Vec<TripletSample> {
    let target = Target::new(TaskKind::Iqa, dataset);
    l.rungs
        .iter()
        .filter_map(|(&k, milder)| {
            let harsher = l.rungs.get(&(k + 1))?;
            Some(
                ordered_triplet(
                    target,
                    iqa_reference(),
                    milder.clone(),
                    harsher.clone(),
                    Some(("levels", json!(k), json!(k + 1))),
                    rng,
                )
                .with_meta("pristine", l.reference.locator()),
            )
        })
        .collect()
}

/// Img-2AFC triplet from a fractional human preference for `b` over `a`.
/// Exactly 0.5 carries no majority and yields `None`.
pub fn build_preference_pair(
    reference: MediaItem,
    a: MediaItem,
    b: MediaItem,
    prefer_b: f64,
    dataset: &str,
    rng: &mut impl Rng,
) -> Option<TripletSample> {
    let target = Target::new(TaskKind::Img2Afc, dataset);
    let (preferred, other, p) = if prefer_b > 0.5 {
        (b, a, prefer_b)
    } else if prefer_b < 0.5 {
        (a, b, 1.0 - prefer_b)
    } else {
        return None;
    };
    Some(ordered_triplet(target, reference, preferred, other, None, rng).with_meta("agreement", p))
}

/// A pristine image against its distorted version; the pristine one is preferred.
pub fn build_pristine_vs_distorted(
    pristine: MediaItem,
    distorted: MediaItem,
    dataset: &str,
    rng: &mut impl Rng,
) -> TripletSample {
    ordered_triplet(
        Target::new(TaskKind::Iqa, dataset),
        iqa_reference(),
        pristine,
        distorted,
        None,
        rng,
    )
}

/// Samples derived from one editing record.
#[derive(Debug, Clone, PartialEq)]
pub struct EditPairSamples {
    pub it2afc: [TripletSample; 2],
    pub text2afc: [TripletSample; 2],
}

/// Each description picks out its own image (IT-2AFC), and each image picks
/// out its own description (Text-2AFC). Both samples of a task share one
/// candidate order, so their labels are opposite.
pub fn build_hqedit_pair(
    src_img: &MediaItem,
    tgt_img: &MediaItem,
    src_desc: &str,
    tgt_desc: &str,
    dataset: &str,
    rng: &mut impl Rng,
) -> Result<EditPairSamples, ForgeError> {
    for (field, empty) in [
        ("source description", src_desc.trim().is_empty()),
        ("target description", tgt_desc.trim().is_empty()),
        ("source image", src_img.locator().is_empty()),
        ("target image", tgt_img.locator().is_empty()),
    ] {
        if empty {
            return Err(ForgeError::MissingField(field));
        }
    }
    let degenerate = src_desc == tgt_desc;
    let mut pair =
        |task: TaskKind, refs: [MediaItem; 2], cands: [MediaItem; 2]| -> [TripletSample; 2] {
            let swap = rng.gen_bool(0.5);
            let cand = if swap {
                [cands[1].clone(), cands[0].clone()]
            } else {
                cands.clone()
            };
            let build = |k: usize, reference: MediaItem| {
                let label = (k == 1) ^ swap;
                let mut s = TripletSample::new(task, dataset, reference, cand.clone(), label as u8)
                    .with_meta("preferred", cands[k].locator())
                    .with_meta("side", if k == 0 { "source" } else { "target" });
                if degenerate {
                    s = s.with_meta("degenerate", true);
                }
                s
            };
            let [r0, r1] = refs;
            [build(0, r0), build(1, r1)]
        };
    let it2afc = pair(
        TaskKind::It2Afc,
        [MediaItem::text(src_desc), MediaItem::text(tgt_desc)],
        [src_img.clone(), tgt_img.clone()],
    );
    let text2afc = pair(
        TaskKind::Text2Afc,
        [src_img.clone(), tgt_img.clone()],
        [MediaItem::text(src_desc), MediaItem::text(tgt_desc)],
    );
    Ok(EditPairSamples { it2afc, text2afc })
}

pub const CAPTION_NEGATIVE_MAX_SCORE: f64 = 0.5;

/// Human reference caption against each generated caption scored 0.5 or lower.
pub fn build_caption_negatives(
    image: &MediaItem,
    reference_caption: &str,
    generated: &[(String, f64)],
    dataset: &str,
    rng: &mut impl Rng,
) -> Vec<TripletSample> {
    let target = Target::new(TaskKind::Text2Afc, dataset);
    generated
        .iter()
        .filter(|(_, score)| *score <= CAPTION_NEGATIVE_MAX_SCORE)
        .map(|(caption, score)| {
            ordered_triplet(
                target,
                image.clone(),
                MediaItem::text(reference_caption),
                MediaItem::text(caption.clone()),
                None,
                rng,
            )
            .with_meta("generated_score", *score)
        })
        .collect()
}

/// A fused caption against each original caption of the same image; the fused one is preferred.
pub fn build_fused_caption_pairs(
    image: &MediaItem,
    fused: &str,
    originals: &[String],
    dataset: &str,
    rng: &mut impl Rng,
) -> Vec<TripletSample> {
    let target = Target::new(TaskKind::Text2Afc, dataset);
    originals
        .iter()
        .map(|c| {
            ordered_triplet(
                target,
                image.clone(),
                MediaItem::text(fused),
                MediaItem::text(c.clone()),
                None,
                rng,
            )
        })
        .collect()
}

/// Two images of one macro-class and one of another; the latter is odd.
pub fn build_ooo_triplets(
    map: &MacroClassMap,
    images: &BTreeMap<String, Vec<MediaItem>>,
    n: usize,
    dataset: &str,
    rng: &mut impl Rng,
) -> Result<Vec<OddOneOutSample>, ForgeError> {
    map.check_disjoint()?;
    let mut by_macro: BTreeMap<&str, Vec<&MediaItem>> = BTreeMap::new();
    for (class, items) in images {
        if let Some(m) = map.macro_of(class) {
            by_macro.entry(m).or_default().extend(items);
        }
    }
    by_macro.retain(|_, v| !v.is_empty());
    let pair_macros: Vec<&str> = by_macro
        .iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(k, _)| *k)
        .collect();
    if by_macro.len() < 2 {
        return Err(ForgeError::InsufficientClasses(
            "images from at least 2 macro-classes".into(),
        ));
    }
    if pair_macros.is_empty() {
        return Err(ForgeError::InsufficientClasses(
            "a macro-class with at least 2 images".into(),
        ));
    }
    let names: Vec<&str> = by_macro.keys().copied().collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let same = *pair_macros.choose(rng).unwrap();
        let others: Vec<&str> = names.iter().copied().filter(|m| *m != same).collect();
        let odd_macro = *others.choose(rng).unwrap();
        let two: Vec<&MediaItem> = by_macro[same].choose_multiple(rng, 2).copied().collect();
        let odd_item = *by_macro[odd_macro].choose(rng).unwrap();
        let odd = rng.gen_range(0..3u8);
        let mut items = vec![two[0].clone(), two[1].clone()];
        items.insert(odd as usize, odd_item.clone());
        let mut macros = vec![same, same];
        macros.insert(odd as usize, odd_macro);
        let mut meta = serde_json::Map::new();
        meta.insert("macro_classes".into(), json!(macros));
        meta.insert("preferred".into(), json!(odd_item.locator()));
        out.push(OddOneOutSample {
            dataset: dataset.to_string(),
            items: items.try_into().expect("three items"),
            odd,
            meta,
        });
    }
    Ok(out)
}

/// Moves the odd item of an existing triplet to a random position.
pub fn reshuffle_ooo(s: &OddOneOutSample, rng: &mut impl Rng) -> OddOneOutSample {
    let odd_item = s.items[s.odd as usize].clone();
    let mut rest: Vec<MediaItem> = s
        .items
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != s.odd as usize)
        .map(|(_, m)| m.clone())
        .collect();
    rest.shuffle(rng);
    let odd = rng.gen_range(0..3u8);
    rest.insert(odd as usize, odd_item.clone());
    let mut meta = s.meta.clone();
    meta.insert("preferred".into(), json!(odd_item.locator()));
    OddOneOutSample {
        dataset: s.dataset.clone(),
        items: rest.try_into().expect("three items"),
        odd,
        meta,
    }
}

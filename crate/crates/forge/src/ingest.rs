//! Per-dataset adapters from raw annotation files to canonical samples.
//!
//! Raw layouts are documented in `ADAPTERS.md` next to this crate's manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use unisim_core::{
    validate_sample, MediaItem, OddOneOutSample, PerceptualAttribute, QueryRelevance, Relevance,
    RetrievalSplit, Sample, TaskKind,
};

use crate::builders::*;
use crate::error::ForgeError;
use crate::types::{MacroClassMap, RankOrder, RankedGroup, SeverityLadder};

pub const BUILDER_VERSION: &str = "1";

pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const MACRO_CLASSES_FILE: &str = "macro_classes.json";
pub const RETRIEVAL_FILE: &str = "gnd.json";

/// Dataset ids accepted by [`ingest_dataset`], with their default sample caps.
pub const DATASETS: &[(&str, Option<usize>)] = &[
    ("nights", None),
    ("bapps", Some(5000)),
    ("pieapp-img2afc", None),
    ("imagereward", None),
    ("hpdv2", Some(5000)),
    ("agiqa3k-it2afc", Some(5000)),
    ("magicbrush", None),
    ("hqedit-it2afc", Some(2000)),
    ("hqedit-text2afc", Some(2000)),
    ("cdcoco", None),
    ("polaris", Some(5000)),
    ("kadid10k", Some(5000)),
    ("koniq10k-iqa", Some(5000)),
    ("pieapp-iqa", Some(5000)),
    ("agiqa3k-iqa", Some(5000)),
    ("pipal", Some(3025)),
    ("sice-brightness", Some(2151)),
    ("koniq10k-brightness", Some(5000)),
    ("koniq10k-colorfulness", Some(5000)),
    ("koniq10k-contrast", Some(5000)),
    ("koniq10k-sharpness", Some(5000)),
    ("cifar100-ooo", Some(5000)),
    ("imagenet-ooo", Some(5000)),
    ("roxford", None),
    ("rparis", None),
];

pub fn supported_datasets() -> Vec<&'static str> {
    DATASETS.iter().map(|(id, _)| *id).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub seed: u64,
    /// Keep only raw records whose `split` field equals this value.
    pub split: Option<String>,
    /// Overrides the dataset's default sample cap.
    pub limit: Option<usize>,
    /// Fraction of lowest-quality images dropped before AGIQA alignment pairs.
    pub quality_drop_fraction: f64,
    /// Score pairs need a difference strictly greater than this.
    pub min_gap: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            split: None,
            limit: None,
            quality_drop_fraction: 0.25,
            min_gap: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    pub count: usize,
    pub seed: u64,
    pub builder_version: String,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, ForgeError> {
        let text = std::fs::read_to_string(path).map_err(ForgeError::io(path))?;
        serde_json::from_str(&text).map_err(|e| ForgeError::Annotation {
            path: path.into(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

pub fn samples_path(out_dir: &Path, dataset: &str) -> PathBuf {
    out_dir.join(format!("{dataset}.jsonl"))
}

pub fn manifest_path(out_dir: &Path, dataset: &str) -> PathBuf {
    out_dir.join(format!("{dataset}.manifest.json"))
}

/// Builds, validates and writes `<out>/<dataset>.jsonl` plus its manifest.
pub fn ingest_dataset(
    name: &str,
    raw_dir: &Path,
    out_dir: &Path,
    opts: &IngestOptions,
) -> Result<Manifest, ForgeError> {
    let samples = build_dataset(name, raw_dir, opts)?;
    std::fs::create_dir_all(out_dir).map_err(ForgeError::io(out_dir))?;
    let count = unisim_core::write_jsonl(&samples_path(out_dir, name), &samples)?;
    let manifest = Manifest {
        dataset: name.into(),
        count,
        seed: opts.seed,
        builder_version: BUILDER_VERSION.into(),
    };
    let path = manifest_path(out_dir, name);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(ForgeError::io(&path))?;
    Ok(manifest)
}

/// Canonical samples for one dataset, validated, in output order.
pub fn build_dataset(
    name: &str,
    raw_dir: &Path,
    opts: &IngestOptions,
) -> Result<Vec<Sample>, ForgeError> {
    let default_cap = DATASETS
        .iter()
        .find(|(id, _)| *id == name)
        .map(|(_, cap)| *cap)
        .ok_or_else(|| ForgeError::UnknownDataset {
            name: name.into(),
            supported: supported_datasets(),
        })?;
    let raw = std::path::absolute(raw_dir).map_err(ForgeError::io(raw_dir))?;
    let cx = Cx {
        name,
        raw: &raw,
        opts,
        cap: opts.limit.or(default_cap),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    let samples = cx.build()?;
    for (index, s) in samples.iter().enumerate() {
        validate_sample(s).map_err(|violations| ForgeError::Invalid {
            dataset: name.into(),
            index,
            violations,
        })?;
    }
    Ok(samples)
}

struct Cx<'a> {
    name: &'a str,
    raw: &'a Path,
    opts: &'a IngestOptions,
    cap: Option<usize>,
    rng: ChaCha8Rng,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripletRecord {
    #[serde(rename = "ref")]
    reference: String,
    a: String,
    b: String,
    /// Fraction of judges for whom `b` is closer to `ref`.
    prefer_b: f64,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankedImage {
    image: String,
    rank: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptGroupRecord {
    prompt: String,
    images: Vec<RankedImage>,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AgiqaRecord {
    image: String,
    prompt: String,
    quality: f64,
    alignment: f64,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EditRecord {
    source: String,
    target: String,
    instruction: String,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DescribedEditRecord {
    source: String,
    target: String,
    source_desc: String,
    target_desc: String,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FusedCaptionRecord {
    image: String,
    fused_caption: String,
    coco_captions: Vec<String>,
    negative_votes: u32,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoredCaption {
    caption: String,
    score: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaptionRecord {
    image: String,
    references: Vec<String>,
    candidates: Vec<ScoredCaption>,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeverityRecord {
    reference: String,
    image: String,
    distortion: String,
    level: u32,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PristineRecord {
    reference: String,
    distorted: String,
    #[serde(default)]
    split: Option<String>,
}

/// Image with a mean opinion score and optional attribute scores.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoredImage {
    image: String,
    #[serde(default)]
    reference: Option<String>,
    #[serde(default)]
    mos: Option<f64>,
    #[serde(default)]
    brightness: Option<f64>,
    #[serde(default)]
    colorfulness: Option<f64>,
    #[serde(default)]
    contrast: Option<f64>,
    #[serde(default)]
    sharpness: Option<f64>,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OooRecord {
    items: [String; 3],
    odd: u8,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassImage {
    image: String,
    class: String,
    #[serde(default)]
    split: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrievalQuery {
    image: String,
    easy: Vec<usize>,
    hard: Vec<usize>,
    junk: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrievalGround {
    gallery: Vec<String>,
    queries: Vec<RetrievalQuery>,
}

/// A record carrying an optional `split` tag.
trait Split {
    fn split(&self) -> Option<&str>;
}

macro_rules! impl_split {
    ($($t:ty),*) => {$(
        impl Split for $t {
            fn split(&self) -> Option<&str> {
                self.split.as_deref()
            }
        }
    )*};
}

impl_split!(
    TripletRecord,
    PromptGroupRecord,
    AgiqaRecord,
    EditRecord,
    DescribedEditRecord,
    FusedCaptionRecord,
    CaptionRecord,
    SeverityRecord,
    PristineRecord,
    ScoredImage,
    OooRecord,
    ClassImage
);

fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

impl Cx<'_> {
    fn media(&self, locator: &str) -> MediaItem {
        let item = MediaItem::image(locator);
        if item.remote_scheme().is_some()
            || locator.starts_with("file://")
            || Path::new(locator).is_absolute()
        {
            return item;
        }
        MediaItem::image(self.raw.join(locator).to_string_lossy().into_owned())
    }

    fn annotation_error(&self, file: &str, line: usize, message: impl Into<String>) -> ForgeError {
        ForgeError::Annotation {
            path: self.raw.join(file),
            line,
            message: message.into(),
        }
    }

    /// Records of `annotations.jsonl` with their 1-based line numbers, after the split filter.
    fn records<T: DeserializeOwned + Split>(&self) -> Result<Vec<(usize, T)>, ForgeError> {
        let path = self.raw.join(ANNOTATIONS_FILE);
        let text = std::fs::read_to_string(&path).map_err(ForgeError::io(&path))?;
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: T = serde_json::from_str(line)
                .map_err(|e| self.annotation_error(ANNOTATIONS_FILE, i + 1, e.to_string()))?;
            if let Some(want) = &self.opts.split {
                if rec.split() != Some(want.as_str()) {
                    continue;
                }
            }
            out.push((i + 1, rec));
        }
        Ok(out)
    }

    fn finite(&self, line: usize, field: &str, v: f64) -> Result<f64, ForgeError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.annotation_error(ANNOTATIONS_FILE, line, format!("`{field}` must be finite")))
        }
    }

    /// Keeps at most the cap, as a seeded subset in original order.
    fn capped<T>(&mut self, items: Vec<T>) -> Vec<T> {
        match self.cap {
            Some(cap) if items.len() > cap => {
                let mut keep = index::sample(&mut self.rng, items.len(), cap).into_vec();
                keep.sort_unstable();
                let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
                keep.into_iter()
                    .map(|i| slots[i].take().expect("indices are distinct"))
                    .collect()
            }
            _ => items,
        }
    }

    /// Sample count for pair samplers: the cap, or every eligible pair if fewer.
    fn pair_count(&self, eligible: u64) -> usize {
        let cap = self.cap.unwrap_or(usize::MAX) as u64;
        cap.min(eligible) as usize
    }

    fn build(mut self) -> Result<Vec<Sample>, ForgeError> {
        let name = self.name;
        let samples: Vec<Sample> = match name {
            "nights" | "bapps" | "pieapp-img2afc" => {
                let recs = self.records::<TripletRecord>()?;
                let recs = self.capped(recs);
                let mut out = Vec::new();
                for (line, r) in recs {
                    let p = self.finite(line, "prefer_b", r.prefer_b)?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(self.annotation_error(
                            ANNOTATIONS_FILE,
                            line,
                            "`prefer_b` must lie in [0, 1]",
                        ));
                    }
                    let (reference, a, b) =
                        (self.media(&r.reference), self.media(&r.a), self.media(&r.b));
                    if let Some(s) = build_preference_pair(reference, a, b, p, name, &mut self.rng)
                    {
                        out.push(s.into());
                    }
                }
                out
            }
            "imagereward" => {
                let groups = self.ranked_groups()?;
                let groups = self.capped(groups);
                let target = Target::new(TaskKind::It2Afc, name);
                let mut out = Vec::new();
                for g in &groups {
                    out.push(build_rank_extremes(g, target, &mut self.rng)?.into());
                }
                out
            }
            "hpdv2" => {
                let groups = self.ranked_groups()?;
                self.ranked_pairs(&groups, TaskKind::It2Afc)?
            }
            "agiqa3k-it2afc" => {
                let mut recs = self.records::<AgiqaRecord>()?;
                for (line, r) in &recs {
                    self.finite(*line, "quality", r.quality)?;
                    self.finite(*line, "alignment", r.alignment)?;
                }
                // drop the lowest-quality fraction, ties broken by file order
                let mut by_quality: Vec<usize> = (0..recs.len()).collect();
                by_quality.sort_by(|&a, &b| {
                    recs[a]
                        .1
                        .quality
                        .total_cmp(&recs[b].1.quality)
                        .then(a.cmp(&b))
                });
                let n_drop = (recs.len() as f64 * self.opts.quality_drop_fraction).floor() as usize;
                let mut dropped = vec![false; recs.len()];
                for &i in &by_quality[..n_drop] {
                    dropped[i] = true;
                }
                let mut i = 0;
                recs.retain(|_| {
                    i += 1;
                    !dropped[i - 1]
                });
                let mut groups: BTreeMap<String, Vec<(MediaItem, f64)>> = BTreeMap::new();
                for (_, r) in &recs {
                    groups
                        .entry(r.prompt.clone())
                        .or_default()
                        .push((self.media(&r.image), r.alignment));
                }
                let groups: Vec<RankedGroup> = groups
                    .into_iter()
                    .map(|(prompt, entries)| RankedGroup {
                        prompt,
                        entries,
                        ordering: RankOrder::ScoreHigherBetter,
                    })
                    .collect();
                self.ranked_pairs(&groups, TaskKind::It2Afc)?
            }
            "agiqa3k-iqa" => {
                let recs = self.records::<AgiqaRecord>()?;
                let mut pool = Vec::with_capacity(recs.len());
                for (line, r) in &recs {
                    pool.push((
                        self.media(&r.image),
                        self.finite(*line, "quality", r.quality)?,
                    ));
                }
                self.score_pairs(&pool, TaskKind::Iqa)?
            }
            "magicbrush" => {
                let recs = self.records::<EditRecord>()?;
                let recs = self.capped(recs);
                let target = Target::new(TaskKind::It2Afc, name);
                recs.into_iter()
                    .map(|(_, r)| {
                        let (src, tgt) = (self.media(&r.source), self.media(&r.target));
                        ordered_triplet(
                            target,
                            MediaItem::text(r.instruction),
                            tgt,
                            src,
                            None,
                            &mut self.rng,
                        )
                        .with_meta("ref_source", "instruction")
                        .into()
                    })
                    .collect()
            }
            "hqedit-it2afc" | "hqedit-text2afc" => {
                let recs = self.records::<DescribedEditRecord>()?;
                // each record yields two samples
                self.cap = self.cap.map(|c| c / 2);
                let recs = self.capped(recs);
                let mut out = Vec::new();
                for (line, r) in recs {
                    let (src, tgt) = (self.media(&r.source), self.media(&r.target));
                    let pair = build_hqedit_pair(
                        &src,
                        &tgt,
                        &r.source_desc,
                        &r.target_desc,
                        name,
                        &mut self.rng,
                    )
                    .map_err(|e| self.annotation_error(ANNOTATIONS_FILE, line, e.to_string()))?;
                    let two = if name == "hqedit-it2afc" {
                        pair.it2afc
                    } else {
                        pair.text2afc
                    };
                    out.extend(two.into_iter().map(Sample::from));
                }
                out
            }
            "cdcoco" => {
                let recs = self.records::<FusedCaptionRecord>()?;
                let mut out = Vec::new();
                for (_, r) in recs.into_iter().filter(|(_, r)| r.negative_votes == 0) {
                    let image = self.media(&r.image);
                    out.extend(
                        build_fused_caption_pairs(
                            &image,
                            &r.fused_caption,
                            &r.coco_captions,
                            name,
                            &mut self.rng,
                        )
                        .into_iter()
                        .map(Sample::from),
                    );
                }
                self.capped(out)
            }
            "polaris" => {
                let recs = self.records::<CaptionRecord>()?;
                let mut out = Vec::new();
                for (line, r) in recs {
                    let reference = r.references.first().ok_or_else(|| {
                        self.annotation_error(ANNOTATIONS_FILE, line, "`references` is empty")
                    })?;
                    let generated: Vec<(String, f64)> = r
                        .candidates
                        .into_iter()
                        .map(|c| (c.caption, c.score))
                        .collect();
                    for (_, s) in &generated {
                        self.finite(line, "score", *s)?;
                    }
                    let image = self.media(&r.image);
                    out.extend(
                        build_caption_negatives(&image, reference, &generated, name, &mut self.rng)
                            .into_iter()
                            .map(Sample::from),
                    );
                }
                self.capped(out)
            }
            "kadid10k" => {
                let recs = self.records::<SeverityRecord>()?;
                let mut ladders: BTreeMap<(String, String), SeverityLadder> = BTreeMap::new();
                for (line, r) in recs {
                    if r.level == 0 {
                        return Err(self.annotation_error(
                            ANNOTATIONS_FILE,
                            line,
                            "`level` must be positive",
                        ));
                    }
                    let ladder = ladders
                        .entry((r.reference.clone(), r.distortion.clone()))
                        .or_insert_with(|| SeverityLadder {
                            reference: self.media(&r.reference),
                            rungs: BTreeMap::new(),
                        });
                    if ladder.rungs.insert(r.level, self.media(&r.image)).is_some() {
                        return Err(self.annotation_error(
                            ANNOTATIONS_FILE,
                            line,
                            format!(
                                "duplicate level {} for this reference and distortion",
                                r.level
                            ),
                        ));
                    }
                }
                let mut out = Vec::new();
                for l in ladders.values() {
                    out.extend(
                        build_adjacent_severity(l, name, &mut self.rng)
                            .into_iter()
                            .map(Sample::from),
                    );
                }
                self.capped(out)
            }
            "pieapp-iqa" => {
                let recs = self.records::<PristineRecord>()?;
                let recs = self.capped(recs);
                recs.into_iter()
                    .map(|(_, r)| {
                        let (p, d) = (self.media(&r.reference), self.media(&r.distorted));
                        build_pristine_vs_distorted(p, d, name, &mut self.rng).into()
                    })
                    .collect()
            }
            "koniq10k-iqa" => {
                let pool = self.scored_pool(|r| r.mos, "mos")?;
                self.score_pairs(&pool, TaskKind::Iqa)?
            }
            "sice-brightness" | "koniq10k-brightness" => {
                let pool = self.scored_pool(|r| r.brightness, "brightness")?;
                self.score_pairs(&pool, TaskKind::Paa(PerceptualAttribute::Brightness))?
            }
            "koniq10k-colorfulness" => {
                let pool = self.scored_pool(|r| r.colorfulness, "colorfulness")?;
                self.score_pairs(&pool, TaskKind::Paa(PerceptualAttribute::Colorfulness))?
            }
            "koniq10k-contrast" => {
                let pool = self.scored_pool(|r| r.contrast, "contrast")?;
                self.score_pairs(&pool, TaskKind::Paa(PerceptualAttribute::Contrast))?
            }
            "koniq10k-sharpness" => {
                let pool = self.scored_pool(|r| r.sharpness, "sharpness")?;
                self.score_pairs(&pool, TaskKind::Paa(PerceptualAttribute::Sharpness))?
            }
            "pipal" => {
                let recs = self.records::<ScoredImage>()?;
                let mut pools: BTreeMap<String, Vec<(MediaItem, f64)>> = BTreeMap::new();
                for (line, r) in &recs {
                    let reference = r.reference.as_ref().ok_or_else(|| {
                        self.annotation_error(ANNOTATIONS_FILE, *line, "missing field `reference`")
                    })?;
                    let mos = r.mos.ok_or_else(|| {
                        self.annotation_error(ANNOTATIONS_FILE, *line, "missing field `mos`")
                    })?;
                    pools
                        .entry(reference.clone())
                        .or_default()
                        .push((self.media(&r.image), self.finite(*line, "mos", mos)?));
                }
                let pools: Vec<ScoredPool> = pools
                    .into_values()
                    .map(|items| ScoredPool {
                        reference: MediaItem::text(unisim_core::IQA_REFERENCE_PROMPT),
                        items,
                    })
                    .collect();
                let scores: Vec<Vec<f64>> = pools
                    .iter()
                    .map(|p| p.items.iter().map(|x| x.1).collect())
                    .collect();
                let n = self.pair_count(
                    crate::pairs::PairSampler::new(&scores, self.opts.min_gap).eligible(),
                );
                build_grouped_score_pairs(
                    &pools,
                    n,
                    self.opts.min_gap,
                    Target::new(TaskKind::Iqa, name),
                    &mut self.rng,
                )?
                .into_iter()
                .map(Sample::from)
                .collect()
            }
            "cifar100-ooo" => {
                let recs = self.records::<OooRecord>()?;
                let recs = self.capped(recs);
                let mut out = Vec::new();
                for (line, r) in recs {
                    if r.odd > 2 {
                        return Err(self.annotation_error(
                            ANNOTATIONS_FILE,
                            line,
                            "`odd` must be 0, 1 or 2",
                        ));
                    }
                    let items = r.items.map(|i| self.media(&i));
                    let s = OddOneOutSample {
                        dataset: name.into(),
                        items,
                        odd: r.odd,
                        meta: Default::default(),
                    };
                    out.push(reshuffle_ooo(&s, &mut self.rng).into());
                }
                out
            }
            "imagenet-ooo" => {
                let path = self.raw.join(MACRO_CLASSES_FILE);
                let text = std::fs::read_to_string(&path).map_err(ForgeError::io(&path))?;
                let map: MacroClassMap = serde_json::from_str(&text).map_err(|e| {
                    self.annotation_error(MACRO_CLASSES_FILE, e.line(), e.to_string())
                })?;
                let recs = self.records::<ClassImage>()?;
                let mut images: BTreeMap<String, Vec<MediaItem>> = BTreeMap::new();
                for (_, r) in recs {
                    images
                        .entry(r.class)
                        .or_default()
                        .push(self.media(&r.image));
                }
                let n = self.cap.unwrap_or(5000);
                build_ooo_triplets(&map, &images, n, name, &mut self.rng)?
                    .into_iter()
                    .map(Sample::from)
                    .collect()
            }
            "roxford" | "rparis" => {
                let path = self.raw.join(RETRIEVAL_FILE);
                let text = std::fs::read_to_string(&path).map_err(ForgeError::io(&path))?;
                let gnd: RetrievalGround = serde_json::from_str(&text)
                    .map_err(|e| self.annotation_error(RETRIEVAL_FILE, e.line(), e.to_string()))?;
                let relevance = gnd
                    .queries
                    .iter()
                    .map(|q| QueryRelevance {
                        medium: Relevance {
                            positives: sorted_union(&q.easy, &q.hard),
                            junk: sorted_union(&q.junk, &[]),
                        },
                        hard: Relevance {
                            positives: sorted_union(&q.hard, &[]),
                            junk: sorted_union(&q.junk, &q.easy),
                        },
                    })
                    .collect();
                vec![RetrievalSplit {
                    dataset: name.into(),
                    queries: gnd.queries.iter().map(|q| self.media(&q.image)).collect(),
                    gallery: gnd.gallery.iter().map(|g| self.media(g)).collect(),
                    relevance,
                }
                .into()]
            }
            _ => unreachable!("dataset ids are checked against DATASETS"),
        };
        Ok(samples)
    }

    fn ranked_groups(&self) -> Result<Vec<RankedGroup>, ForgeError> {
        let recs = self.records::<PromptGroupRecord>()?;
        let mut groups = Vec::with_capacity(recs.len());
        for (line, r) in recs {
            let mut entries = Vec::with_capacity(r.images.len());
            for img in r.images {
                entries.push((self.media(&img.image), self.finite(line, "rank", img.rank)?));
            }
            groups.push(RankedGroup {
                prompt: r.prompt,
                entries,
                ordering: RankOrder::RankAscendingBest,
            });
        }
        Ok(groups)
    }

    fn ranked_pairs(
        &mut self,
        groups: &[RankedGroup],
        task: TaskKind,
    ) -> Result<Vec<Sample>, ForgeError> {
        let utilities: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| g.entries.iter().map(|(_, v)| g.utility(*v)).collect())
            .collect();
        let n = self.pair_count(crate::pairs::PairSampler::new(&utilities, 0.0).eligible());
        Ok(
            build_ranked_pairs(groups, n, Target::new(task, self.name), &mut self.rng)?
                .into_iter()
                .map(Sample::from)
                .collect(),
        )
    }

    fn scored_pool(
        &self,
        field: impl Fn(&ScoredImage) -> Option<f64>,
        field_name: &str,
    ) -> Result<Vec<(MediaItem, f64)>, ForgeError> {
        let recs = self.records::<ScoredImage>()?;
        let mut pool = Vec::with_capacity(recs.len());
        for (line, r) in &recs {
            let v = field(r).ok_or_else(|| {
                self.annotation_error(
                    ANNOTATIONS_FILE,
                    *line,
                    format!("missing field `{field_name}`"),
                )
            })?;
            pool.push((self.media(&r.image), self.finite(*line, field_name, v)?));
        }
        Ok(pool)
    }

    fn score_pairs(
        &mut self,
        pool: &[(MediaItem, f64)],
        task: TaskKind,
    ) -> Result<Vec<Sample>, ForgeError> {
        let scores = vec![pool.iter().map(|x| x.1).collect::<Vec<_>>()];
        let n =
            self.pair_count(crate::pairs::PairSampler::new(&scores, self.opts.min_gap).eligible());
        Ok(build_score_pairs(
            pool,
            n,
            self.opts.min_gap,
            Target::new(task, self.name),
            &mut self.rng,
        )?
        .into_iter()
        .map(Sample::from)
        .collect())
    }
}

/// Ranked groups from an HPDv2-style annotation file, for NAFC instances.
pub fn load_ranked_groups(
    raw_dir: &Path,
    opts: &IngestOptions,
) -> Result<Vec<RankedGroup>, ForgeError> {
    let raw = std::path::absolute(raw_dir).map_err(ForgeError::io(raw_dir))?;
    let cx = Cx {
        name: "hpdv2",
        raw: &raw,
        opts,
        cap: None,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    cx.ranked_groups()
}

/// Re-derives labels from `meta.preferred` and reports the first mismatch.
pub fn check_ground_truth(samples: &[Sample]) -> Result<(), usize> {
    for (i, s) in samples.iter().enumerate() {
        let ok = match s {
            Sample::Triplet(t) => match t.meta.get("preferred").and_then(Value::as_str) {
                Some(p) => t.preferred().map(|m| m.locator()) == Some(p),
                None => true,
            },
            Sample::OddOneOut(o) => match o.meta.get("preferred").and_then(Value::as_str) {
                Some(p) => o.items.get(o.odd as usize).map(|m| m.locator()) == Some(p),
                None => true,
            },
            Sample::Retrieval(_) => true,
        };
        if !ok {
            return Err(i);
        }
    }
    Ok(())
}

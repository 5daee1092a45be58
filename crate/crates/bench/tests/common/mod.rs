#![allow(dead_code)]

use std::path::{Path, PathBuf};

use unisim_core::{
    write_jsonl, MediaItem, OddOneOutSample, PerceptualAttribute, QueryRelevance, Relevance,
    RetrievalSplit, Sample, TaskKind, TripletSample, IQA_REFERENCE_PROMPT,
};

pub fn img(name: String) -> MediaItem {
    MediaItem::image(format!("mem://{name}"))
}

/// Writes `<dir>/<id>.jsonl` and its manifest.
pub fn write_dataset(dir: &Path, id: &str, samples: &[Sample]) -> PathBuf {
    let path = dir.join(format!("{id}.jsonl"));
    write_jsonl(&path, samples).unwrap();
    let manifest = serde_json::json!({"dataset": id, "count": samples.len(), "seed": 0, "builder_version": "test"});
    std::fs::write(
        dir.join(format!("{id}.manifest.json")),
        manifest.to_string(),
    )
    .unwrap();
    path
}

pub fn img2afc(id: &str, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            TripletSample::new(
                TaskKind::Img2Afc,
                id,
                img(format!("{id}/r{i}")),
                [img(format!("{id}/a{i}")), img(format!("{id}/b{i}"))],
                (i % 2) as u8,
            )
            .into()
        })
        .collect()
}

pub fn iqa(id: &str, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            TripletSample::new(
                TaskKind::Iqa,
                id,
                MediaItem::text(IQA_REFERENCE_PROMPT),
                [img(format!("{id}/a{i}")), img(format!("{id}/b{i}"))],
                (i % 2) as u8,
            )
            .into()
        })
        .collect()
}

pub fn paa(id: &str, n: usize) -> Vec<Sample> {
    let attr = PerceptualAttribute::Contrast;
    (0..n)
        .map(|i| {
            TripletSample::new(
                TaskKind::Paa(attr),
                id,
                MediaItem::text(unisim_core::paa_reference_prompt(attr)),
                [img(format!("{id}/a{i}")), img(format!("{id}/b{i}"))],
                (i % 2) as u8,
            )
            .into()
        })
        .collect()
}

pub fn ooo(id: &str, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            Sample::OddOneOut(OddOneOutSample {
                dataset: id.into(),
                items: [
                    img(format!("{id}/x{i}")),
                    img(format!("{id}/y{i}")),
                    img(format!("{id}/z{i}")),
                ],
                odd: (i % 3) as u8,
                meta: Default::default(),
            })
        })
        .collect()
}

pub fn retrieval(id: &str) -> Vec<Sample> {
    let relevance = (0..4)
        .map(|q| QueryRelevance {
            medium: Relevance {
                positives: vec![q, q + 4],
                junk: vec![q + 8],
            },
            hard: Relevance {
                positives: vec![q + 4],
                junk: vec![q, q + 8],
            },
        })
        .collect();
    vec![Sample::Retrieval(RetrievalSplit {
        dataset: id.into(),
        queries: (0..4).map(|q| img(format!("{id}/q{q}"))).collect(),
        gallery: (0..20).map(|g| img(format!("{id}/g{g}"))).collect(),
        relevance,
    })]
}

/// A config over the given `(id, path)` datasets with a hash encoder and a
/// random generative backend.
pub fn config_text(datasets: &[(&str, &Path)], extra: &str) -> String {
    let mut s = format!("out = \"run\"\nseed = 5\n{extra}\n");
    s.push_str("[[backends]]\nid = \"hash\"\nkind = \"hash_encoder\"\ndim = 24\n");
    s.push_str("[[backends]]\nid = \"coin\"\nkind = \"random_generative\"\n");
    for (id, path) in datasets {
        s.push_str(&format!(
            "[[datasets]]\nid = \"{id}\"\npath = {:?}\n",
            path.to_str().unwrap()
        ));
    }
    s
}

/// Img-2AFC, IQA and OOO datasets plus a retrieval split; returns the
/// config path.
pub fn standard_suite(dir: &Path) -> PathBuf {
    let sets = [
        ("img", write_dataset(dir, "img", &img2afc("img", 60))),
        ("iqa", write_dataset(dir, "iqa", &iqa("iqa", 80))),
        ("ooo", write_dataset(dir, "ooo", &ooo("ooo", 45))),
    ];
    let refs: Vec<(&str, &Path)> = sets.iter().map(|(i, p)| (*i, p.as_path())).collect();
    let path = dir.join("run.toml");
    std::fs::write(&path, config_text(&refs, "")).unwrap();
    path
}

//! On-disk sample schema: one JSON object per line, tagged with `schema`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CoreError;
use crate::media::MediaItem;
use crate::task::TaskKind;

pub const TRIPLET_SCHEMA: &str = "unisim.triplet.v1";
pub const OOO_SCHEMA: &str = "unisim.ooo.v1";
pub const RETRIEVAL_SCHEMA: &str = "unisim.retrieval.v1";

/// Reference item, two candidates, and the index of the human-preferred one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletSample {
    pub task: TaskKind,
    pub dataset: String,
    #[serde(rename = "ref")]
    pub reference: MediaItem,
    pub cand: [MediaItem; 2],
    pub label: u8,
    #[serde(default)]
    pub meta: Map<String, Value>,
}

impl TripletSample {
    pub fn new(
        task: TaskKind,
        dataset: impl Into<String>,
        reference: MediaItem,
        cand: [MediaItem; 2],
        label: u8,
    ) -> Self {
        Self {
            task,
            dataset: dataset.into(),
            reference,
            cand,
            label,
            meta: Map::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    /// Candidate the label points at, if the label is in range.
    pub fn preferred(&self) -> Option<&MediaItem> {
        self.cand.get(self.label as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddOneOutSample {
    pub dataset: String,
    pub items: [MediaItem; 3],
    pub odd: u8,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub meta: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 2] = [Difficulty::Medium, Difficulty::Hard];
}

/// Gallery indices that count as positives, and those removed before ranking.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relevance {
    pub positives: Vec<usize>,
    pub junk: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRelevance {
    pub medium: Relevance,
    pub hard: Relevance,
}

impl QueryRelevance {
    pub fn at(&self, difficulty: Difficulty) -> &Relevance {
        match difficulty {
            Difficulty::Medium => &self.medium,
            Difficulty::Hard => &self.hard,
        }
    }
}

/// Query set, gallery, and per-query relevance (indexed like `queries`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalSplit {
    pub dataset: String,
    pub queries: Vec<MediaItem>,
    pub gallery: Vec<MediaItem>,
    pub relevance: Vec<QueryRelevance>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Triplet(TripletSample),
    OddOneOut(OddOneOutSample),
    Retrieval(RetrievalSplit),
}

#[derive(Serialize)]
struct Tagged<'a, T> {
    schema: &'static str,
    #[serde(flatten)]
    inner: &'a T,
}

impl Sample {
    pub fn schema(&self) -> &'static str {
        match self {
            Sample::Triplet(_) => TRIPLET_SCHEMA,
            Sample::OddOneOut(_) => OOO_SCHEMA,
            Sample::Retrieval(_) => RETRIEVAL_SCHEMA,
        }
    }

    pub fn dataset(&self) -> &str {
        match self {
            Sample::Triplet(s) => &s.dataset,
            Sample::OddOneOut(s) => &s.dataset,
            Sample::Retrieval(s) => &s.dataset,
        }
    }

    pub fn task(&self) -> TaskKind {
        match self {
            Sample::Triplet(s) => s.task,
            Sample::OddOneOut(_) => TaskKind::Ooo,
            Sample::Retrieval(_) => TaskKind::Retrieval,
        }
    }

    /// Single-line JSON encoding (no trailing newline).
    pub fn to_line(&self) -> String {
        let schema = self.schema();
        let encoded = match self {
            Sample::Triplet(s) => serde_json::to_string(&Tagged { schema, inner: s }),
            Sample::OddOneOut(s) => serde_json::to_string(&Tagged { schema, inner: s }),
            Sample::Retrieval(s) => serde_json::to_string(&Tagged { schema, inner: s }),
        };
        encoded.expect("sample types always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, CoreError> {
        Self::parse_numbered(line, 1)
    }

    fn parse_numbered(line: &str, line_no: usize) -> Result<Self, CoreError> {
        let err = |message: String| CoreError::Parse {
            line: line_no,
            message,
        };
        let mut value: Map<String, Value> =
            serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let schema = match value.remove("schema") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(err("`schema` must be a string".into())),
            None => return Err(err("missing field `schema`".into())),
        };
        fn decode<T: DeserializeOwned>(v: Map<String, Value>) -> Result<T, String> {
            serde_json::from_value(Value::Object(v)).map_err(|e| e.to_string())
        }
        match schema.as_str() {
            TRIPLET_SCHEMA => decode(value).map(Sample::Triplet).map_err(err),
            OOO_SCHEMA => decode(value).map(Sample::OddOneOut).map_err(err),
            RETRIEVAL_SCHEMA => decode(value).map(Sample::Retrieval).map_err(err),
            _ => Err(CoreError::UnknownSchema(schema)),
        }
    }

    pub fn as_triplet(&self) -> Option<&TripletSample> {
        match self {
            Sample::Triplet(s) => Some(s),
            _ => None,
        }
    }
}

impl From<TripletSample> for Sample {
    fn from(s: TripletSample) -> Self {
        Sample::Triplet(s)
    }
}

impl From<OddOneOutSample> for Sample {
    fn from(s: OddOneOutSample) -> Self {
        Sample::OddOneOut(s)
    }
}

impl From<RetrievalSplit> for Sample {
    fn from(s: RetrievalSplit) -> Self {
        Sample::Retrieval(s)
    }
}

/// Parse a JSONL sample file. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn read_jsonl(path: &Path) -> Result<Vec<Sample>, CoreError> {
    let io = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(Sample::parse_numbered(&line, idx + 1)?);
    }
    Ok(out)
}

pub fn write_jsonl<'a>(
    path: &Path,
    samples: impl IntoIterator<Item = &'a Sample>,
) -> Result<usize, CoreError> {
    let io = |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    let mut n = 0;
    for s in samples {
        w.write_all(s.to_line().as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
        n += 1;
    }
    w.flush().map_err(io)?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::PerceptualAttribute;
    use proptest::prelude::*;

    fn triplet() -> TripletSample {
        TripletSample::new(
            TaskKind::It2Afc,
            "hpdv2",
            MediaItem::text("a red bicycle"),
            [MediaItem::image("a.png"), MediaItem::image("b.png")],
            1,
        )
        .with_meta("ranks", vec![3, 1])
    }

    #[test]
    fn triplet_line_has_exact_field_names() {
        let line = Sample::from(triplet()).to_line();
        let v: Value = serde_json::from_str(&line).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        for k in ["schema", "task", "dataset", "ref", "cand", "label", "meta"] {
            assert!(keys.contains(&k.to_string()), "missing {k} in {line}");
        }
        assert_eq!(keys.len(), 7);
        assert_eq!(v["schema"], TRIPLET_SCHEMA);
        assert_eq!(v["ref"]["kind"], "text");
        assert!(!line.contains('\n'));
    }

    #[test]
    fn ooo_line_fields() {
        let s = OddOneOutSample {
            dataset: "imagenet-ooo".into(),
            items: [
                MediaItem::image("0"),
                MediaItem::image("1"),
                MediaItem::image("2"),
            ],
            odd: 2,
            meta: Map::new(),
        };
        let line = Sample::from(s.clone()).to_line();
        assert_eq!(
            line,
            r#"{"schema":"unisim.ooo.v1","dataset":"imagenet-ooo","items":[{"kind":"image","uri":"0"},{"kind":"image","uri":"1"},{"kind":"image","uri":"2"}],"odd":2}"#
        );
        assert_eq!(Sample::from_line(&line).unwrap(), Sample::OddOneOut(s));
    }

    #[test]
    fn unknown_schema_and_missing_fields_are_errors() {
        assert!(matches!(
            Sample::from_line(r#"{"schema":"nope"}"#),
            Err(CoreError::UnknownSchema(_))
        ));
        let err = Sample::from_line(r#"{"schema":"unisim.triplet.v1","task":"iqa"}"#).unwrap_err();
        assert!(err.to_string().contains("missing field"), "{err}");
        assert!(Sample::from_line(r#"{"task":"iqa"}"#).is_err());
    }

    #[test]
    fn file_round_trip_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let samples = vec![Sample::from(triplet()), Sample::from(triplet())];
        assert_eq!(write_jsonl(&path, &samples).unwrap(), 2);
        assert_eq!(read_jsonl(&path).unwrap(), samples);

        std::fs::write(&path, format!("{}\n\nnot json\n", samples[0].to_line())).unwrap();
        match read_jsonl(&path) {
            Err(CoreError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn media() -> impl Strategy<Value = MediaItem> {
        prop_oneof![
            "[a-z0-9/._]{1,20}".prop_map(MediaItem::image),
            "\\PC{0,30}".prop_map(MediaItem::text),
        ]
    }

    fn task() -> impl Strategy<Value = TaskKind> {
        prop_oneof![
            Just(TaskKind::Img2Afc),
            Just(TaskKind::It2Afc),
            Just(TaskKind::Text2Afc),
            Just(TaskKind::Iqa),
            Just(TaskKind::Paa(PerceptualAttribute::Colorfulness)),
        ]
    }

    proptest! {
        #[test]
        fn triplet_round_trip(
            task in task(),
            dataset in "[a-z0-9-]{1,12}",
            r in media(), c0 in media(), c1 in media(),
            label in 0u8..2,
            note in "\\PC{0,10}",
            score in -1e6f64..1e6,
        ) {
            let s = TripletSample::new(task, dataset, r, [c0, c1], label)
                .with_meta("note", note)
                .with_meta("score", score);
            let parsed = Sample::from_line(&Sample::from(s.clone()).to_line()).unwrap();
            prop_assert_eq!(parsed, Sample::Triplet(s));
        }

        #[test]
        fn retrieval_round_trip(nq in 1usize..4, ng in 1usize..6, seed in any::<u64>()) {
            let rel = (0..nq)
                .map(|q| QueryRelevance {
                    medium: Relevance { positives: vec![(seed as usize + q) % ng], junk: vec![] },
                    hard: Relevance { positives: vec![], junk: vec![(q + 1) % ng] },
                })
                .collect();
            let split = RetrievalSplit {
                dataset: "roxford".into(),
                queries: (0..nq).map(|i| MediaItem::image(format!("q{i}"))).collect(),
                gallery: (0..ng).map(|i| MediaItem::image(format!("g{i}"))).collect(),
                relevance: rel,
            };
            let parsed = Sample::from_line(&Sample::from(split.clone()).to_line()).unwrap();
            prop_assert_eq!(parsed, Sample::Retrieval(split));
        }
    }
}

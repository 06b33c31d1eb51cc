//! Post data model and line-delimited corpus ingestion.
//!
//! A corpus file holds one JSON object per line. The canonical fields are
//! `id`, `author_id`, `text`, `posted_at` (`YYYY-MM-DDTHH:MM`, local time),
//! `post_type` (`original` or `forward`) and an optional `label`
//! (`suicidal` or `non_suicidal`). A [`Schema`] binds the canonical names to
//! whatever keys a source file actually uses.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Suicidal,
    NonSuicidal,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Suicidal
    }

    /// `+1.0` for the positive (suicidal) class, `-1.0` otherwise.
    pub fn sign(self) -> f64 {
        match self {
            Label::Suicidal => 1.0,
            Label::NonSuicidal => -1.0,
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Suicidal => Label::NonSuicidal,
            Label::NonSuicidal => Label::Suicidal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Suicidal => "suicidal",
            Label::NonSuicidal => "non_suicidal",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "suicidal" => Ok(Label::Suicidal),
            "non_suicidal" | "nonsuicidal" | "non-suicidal" => Ok(Label::NonSuicidal),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostType {
    Original,
    Forward,
}

impl FromStr for PostType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" => Ok(PostType::Original),
            "forward" => Ok(PostType::Forward),
            other => Err(format!("unknown post_type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub author_id: String,
    pub text: String,
    #[serde(with = "minute_timestamp")]
    pub posted_at: NaiveDateTime,
    pub post_type: PostType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime, chrono::ParseError> {
    NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT)
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

mod minute_timestamp {
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub suicidal: usize,
    pub non_suicidal: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.suicidal + self.non_suicidal
    }

    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Suicidal => self.suicidal,
            Label::NonSuicidal => self.non_suicidal,
        }
    }

    pub(crate) fn add(&mut self, label: Label) {
        match label {
            Label::Suicidal => self.suicidal += 1,
            Label::NonSuicidal => self.non_suicidal += 1,
        }
    }
}

/// An ordered, immutable collection of posts with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    posts: Vec<Post>,
    counts: ClassCounts,
}

impl Corpus {
    pub fn new(posts: Vec<Post>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(posts.len());
        let mut counts = ClassCounts::default();
        for post in &posts {
            if post.id.is_empty() || !seen.insert(post.id.as_str()) {
                return Err(Error::DuplicatePostId(post.id.clone()));
            }
            if let Some(label) = post.label {
                counts.add(label);
            }
        }
        Ok(Corpus { posts, counts })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Counts over labeled posts only.
    pub fn counts(&self) -> ClassCounts {
        self.counts
    }

    pub fn labels(&self) -> Result<Vec<Label>> {
        self.posts
            .iter()
            .map(|p| p.label.ok_or_else(|| Error::UnlabeledPost(p.id.clone())))
            .collect()
    }

    /// The posts at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        let posts: Vec<Post> = indices.iter().map(|&i| self.posts[i].clone()).collect();
        Corpus::new(posts).expect("a subset of a valid corpus with distinct indices is valid")
    }

    /// Posting times of every post, grouped by author.
    pub fn author_history(&self) -> AuthorHistory {
        let mut by_author: BTreeMap<String, Vec<NaiveDateTime>> = BTreeMap::new();
        for post in &self.posts {
            by_author
                .entry(post.author_id.clone())
                .or_default()
                .push(post.posted_at);
        }
        AuthorHistory { by_author }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for post in &self.posts {
            serde_json::to_writer(&mut out, post)?;
            out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Posting timestamps per author, used by the posting-frequency feature.
#[derive(Debug, Clone, Default)]
pub struct AuthorHistory {
    by_author: BTreeMap<String, Vec<NaiveDateTime>>,
}

impl AuthorHistory {
    pub fn of(&self, author_id: &str) -> &[NaiveDateTime] {
        self.by_author.get(author_id).map_or(&[], Vec::as_slice)
    }
}

/// Exact counts by label. Fails on the first unlabeled post.
pub fn class_counts(corpus: &Corpus) -> Result<ClassCounts> {
    let mut counts = ClassCounts::default();
    for post in corpus.posts() {
        let label = post
            .label
            .ok_or_else(|| Error::UnlabeledPost(post.id.clone()))?;
        counts.add(label);
    }
    Ok(counts)
}

/// Maps canonical field names onto the keys used by a source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub id: String,
    pub author_id: String,
    pub text: String,
    pub posted_at: String,
    pub post_type: String,
    pub label: String,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            id: "id".into(),
            author_id: "author_id".into(),
            text: "text".into(),
            posted_at: "posted_at".into(),
            post_type: "post_type".into(),
            label: "label".into(),
        }
    }
}

impl Schema {
    /// Rebinds one canonical field, e.g. `bind("text", "content")`.
    pub fn bind(&mut self, canonical: &str, source: &str) -> Result<(), String> {
        let slot = match canonical {
            "id" => &mut self.id,
            "author_id" => &mut self.author_id,
            "text" => &mut self.text,
            "posted_at" => &mut self.posted_at,
            "post_type" => &mut self.post_type,
            "label" => &mut self.label,
            other => return Err(format!("unknown canonical field {other:?}")),
        };
        *slot = source.to_string();
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub corpus: Corpus,
    /// Non-empty lines seen.
    pub records: usize,
    pub dropped_blank: usize,
    pub errors: Vec<RecordError>,
}

enum Parsed {
    Post(Post),
    Blank,
}

pub fn ingest(path: impl AsRef<Path>, schema: &Schema) -> Result<IngestReport> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), schema).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn ingest_reader<R: BufRead>(reader: R, schema: &Schema) -> Result<IngestReport> {
    let mut posts = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut errors = Vec::new();
    let mut records = 0usize;
    let mut dropped_blank = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        records += 1;
        let line_no = idx + 1;
        match parse_record(&line, schema) {
            Ok(Parsed::Blank) => dropped_blank += 1,
            Ok(Parsed::Post(post)) => {
                if seen.insert(post.id.clone()) {
                    posts.push(post);
                } else {
                    errors.push(RecordError {
                        line: line_no,
                        message: format!("duplicate id {:?}", post.id),
                    });
                }
            }
            Err(message) => errors.push(RecordError {
                line: line_no,
                message,
            }),
        }
    }

    if errors.len() * 2 > records {
        let first = &errors[0];
        return Err(Error::MalformedCorpus {
            malformed: errors.len(),
            total: records,
            first_line: first.line,
            first_message: first.message.clone(),
        });
    }

    Ok(IngestReport {
        corpus: Corpus::new(posts)?,
        records,
        dropped_blank,
        errors,
    })
}

fn parse_record(line: &str, schema: &Schema) -> Result<Parsed, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err("record is not a JSON object".into());
    };

    let text = required_str(&obj, &schema.text)?;
    if text.trim().is_empty() {
        return Ok(Parsed::Blank);
    }
    let id = required_id(&obj, &schema.id)?;
    if id.is_empty() {
        return Err("empty id".into());
    }
    let author_id = required_id(&obj, &schema.author_id)?;
    let posted_raw = required_str(&obj, &schema.posted_at)?;
    let posted_at = parse_timestamp(&posted_raw)
        .map_err(|e| format!("invalid {} {posted_raw:?}: {e}", schema.posted_at))?;
    let post_type = required_str(&obj, &schema.post_type)?.parse::<PostType>()?;
    let label = match obj.get(&schema.label) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.trim().is_empty() => None,
        Some(Value::String(s)) => Some(s.parse::<Label>()?),
        Some(other) => return Err(format!("label must be a string, got {other}")),
    };

    Ok(Parsed::Post(Post {
        id,
        author_id,
        text,
        posted_at,
        post_type,
        label,
    }))
}

fn required_str(obj: &Map<String, Value>, key: &str) -> Result<String, String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(format!("field {key:?} must be a string, got {other}")),
        None => Err(format!("missing field {key:?}")),
    }
}

fn required_id(obj: &Map<String, Value>, key: &str) -> Result<String, String> {
    match obj.get(key) {
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => required_str(obj, key),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(id: &str, text: &str, label: Option<&str>) -> String {
        let mut obj = serde_json::json!({
            "id": id,
            "author_id": "u1",
            "text": text,
            "posted_at": "2013-05-01T23:30",
            "post_type": "original",
        });
        if let Some(l) = label {
            obj["label"] = Value::String(l.into());
        }
        obj.to_string()
    }

    fn ingest_str(s: &str) -> Result<IngestReport> {
        ingest_reader(s.as_bytes(), &Schema::default())
    }

    #[test]
    fn three_valid_records() {
        let input = [
            record("a", "我很难过", Some("suicidal")),
            record("b", "今天天气好", Some("non_suicidal")),
            record("c", "hello", None),
        ]
        .join("\n");
        let report = ingest_str(&input).unwrap();
        assert_eq!(report.corpus.len(), 3);
        assert_eq!(report.dropped_blank, 0);
        assert!(report.errors.is_empty());
        assert_eq!(report.corpus.posts()[2].label, None);
    }

    #[test]
    fn blank_text_is_dropped() {
        let input = [
            record("a", "一", None),
            record("b", "   ", None),
            record("c", "二", None),
        ]
        .join("\n");
        let report = ingest_str(&input).unwrap();
        assert_eq!(report.corpus.len(), 2);
        assert_eq!(report.dropped_blank, 1);
    }

    #[test]
    fn malformed_records_are_collected_with_line_numbers() {
        let input = [
            record("a", "一", None),
            "{not json".to_string(),
            record("b", "二", None),
            record("c", "三", None).replace("original", "retweet"),
            record("d", "四", None),
        ]
        .join("\n");
        let report = ingest_str(&input).unwrap();
        assert_eq!(report.corpus.len(), 3);
        let lines: Vec<usize> = report.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 4]);
        assert!(report.errors[1].message.contains("retweet"));
    }

    #[test]
    fn majority_malformed_is_fatal() {
        let input = [
            record("a", "一", None),
            "garbage".to_string(),
            "[1,2]".to_string(),
        ]
        .join("\n");
        assert!(matches!(
            ingest_str(&input),
            Err(Error::MalformedCorpus {
                malformed: 2,
                total: 3,
                ..
            })
        ));
    }

    #[test]
    fn exactly_half_malformed_is_tolerated() {
        let input = [record("a", "一", None), "garbage".to_string()].join("\n");
        let report = ingest_str(&input).unwrap();
        assert_eq!(report.corpus.len(), 1);
        assert_eq!(report.errors.len(), 1);
    }

    #[test]
    fn duplicate_ids_are_record_errors() {
        let input = [
            record("a", "一", None),
            record("a", "二", None),
            record("b", "三", None),
        ]
        .join("\n");
        let report = ingest_str(&input).unwrap();
        assert_eq!(report.corpus.len(), 2);
        assert_eq!(report.errors[0].line, 2);
    }

    #[test]
    fn bad_timestamp_is_record_error() {
        let input = [
            record("a", "一", None),
            record("b", "二", None).replace("2013-05-01T23:30", "2013-02-30T10:00"),
            record("c", "三", None),
        ]
        .join("\n");
        let report = ingest_str(&input).unwrap();
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].line, 2);
    }

    #[test]
    fn schema_rebinds_source_keys() {
        let line = r#"{"mid":7,"uid":"u","content":"字","time":"2013-01-01T08:00","kind":"forward","tag":"suicidal"}"#;
        let mut schema = Schema::default();
        for (c, s) in [
            ("id", "mid"),
            ("author_id", "uid"),
            ("text", "content"),
            ("posted_at", "time"),
            ("post_type", "kind"),
            ("label", "tag"),
        ] {
            schema.bind(c, s).unwrap();
        }
        let report = ingest_reader(line.as_bytes(), &schema).unwrap();
        let post = &report.corpus.posts()[0];
        assert_eq!(post.id, "7");
        assert_eq!(post.post_type, PostType::Forward);
        assert_eq!(post.label, Some(Label::Suicidal));
        assert!(schema.bind("mentions", "x").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = ingest("/nonexistent/corpus.jsonl", &Schema::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn class_counts_cases() {
        let all_suicidal = (0..10)
            .map(|i| record(&i.to_string(), "字", Some("suicidal")))
            .collect::<Vec<_>>()
            .join("\n");
        let corpus = ingest_str(&all_suicidal).unwrap().corpus;
        let counts = class_counts(&corpus).unwrap();
        assert_eq!((counts.suicidal, counts.non_suicidal), (10, 0));

        let empty = Corpus::default();
        assert_eq!(class_counts(&empty).unwrap(), ClassCounts::default());

        let mixed = [record("x", "字", Some("suicidal")), record("y", "字", None)].join("\n");
        let corpus = ingest_str(&mixed).unwrap().corpus;
        assert!(matches!(class_counts(&corpus), Err(Error::UnlabeledPost(id)) if id == "y"));
    }

    fn arb_post(id: usize) -> impl Strategy<Value = Post> {
        (
            "[a-z]{1,4}",
            "[一-龥a-z0-9，。 ]{0,12}[一-龥]",
            0i64..(3 * 365 * 24 * 60),
            any::<bool>(),
            prop::option::of(any::<bool>()),
        )
            .prop_map(move |(author, text, minutes, original, label)| {
                let base = parse_timestamp("2012-01-01T00:00").unwrap();
                Post {
                    id: format!("p{id}"),
                    author_id: author,
                    text,
                    posted_at: base + chrono::Duration::minutes(minutes),
                    post_type: if original {
                        PostType::Original
                    } else {
                        PostType::Forward
                    },
                    label: label.map(|s| {
                        if s {
                            Label::Suicidal
                        } else {
                            Label::NonSuicidal
                        }
                    }),
                }
            })
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        (0usize..30)
            .prop_flat_map(|n| (0..n).map(arb_post).collect::<Vec<_>>())
            .prop_map(|posts| Corpus::new(posts).unwrap())
    }

    proptest! {
        #[test]
        fn write_then_ingest_round_trips(corpus in arb_corpus()) {
            let mut buf = Vec::new();
            corpus.write_jsonl(&mut buf).unwrap();
            let report = ingest_reader(buf.as_slice(), &Schema::default()).unwrap();
            prop_assert!(report.errors.is_empty());
            prop_assert_eq!(report.corpus, corpus);
        }

        #[test]
        fn counts_sum_to_labeled_posts(corpus in arb_corpus()) {
            let labeled = corpus.posts().iter().filter(|p| p.label.is_some()).count();
            prop_assert_eq!(corpus.counts().total(), labeled);
        }
    }
}

//! Corpus and query ingestion, the tokenization pipeline and lexical overlap
//! checks between paired human and LLM documents.
//!
//! Corpus JSONL holds one object per line with `id`, `text`, `source` and an
//! optional `pair_id`. Query JSONL uses the same layout; relevance judgments
//! come from a separate TREC qrels file (`qid 0 docid grade`).

pub mod porter;
pub mod stopwords;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Origin of a text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Human,
    Llm,
    Other(String),
}

impl Source {
    pub fn as_str(&self) -> &str {
        match self {
            Source::Human => "human",
            Source::Llm => "llm",
            Source::Other(tag) => tag,
        }
    }

    pub fn parse(tag: &str) -> Source {
        match tag {
            "human" => Source::Human,
            "llm" => Source::Llm,
            other => Source::Other(other.to_string()),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Source {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tag = String::deserialize(d)?;
        Ok(Source::parse(&tag))
    }
}

/// On-disk JSONL record shared by corpora and query sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Record {
    id: String,
    text: String,
    source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pair_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: Source,
    /// Links a human document and its rewrite. See [`Corpus::pairs`].
    pub pair_id: Option<String>,
    /// Filled by [`Corpus::tokenize`].
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: Source) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            source,
            pair_id: None,
            tokens: Vec::new(),
        }
    }

    pub fn with_pair(mut self, pair_id: impl Into<String>) -> Self {
        self.pair_id = Some(pair_id.into());
        self
    }

    fn from_record(r: Record) -> Self {
        Document {
            id: r.id,
            text: r.text,
            source: r.source,
            pair_id: r.pair_id,
            tokens: Vec::new(),
        }
    }

    fn to_record(&self) -> Record {
        Record {
            id: self.id.clone(),
            text: self.text.clone(),
            source: self.source.clone(),
            pair_id: self.pair_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub source: Source,
    pub pair_id: Option<String>,
    pub tokens: Vec<String>,
    /// doc id -> relevance grade.
    pub qrels: BTreeMap<String, u32>,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: Source) -> Self {
        Query {
            id: id.into(),
            text: text.into(),
            source,
            pair_id: None,
            tokens: Vec::new(),
            qrels: BTreeMap::new(),
        }
    }

    fn from_record(r: Record) -> Self {
        Query {
            id: r.id,
            text: r.text,
            source: r.source,
            pair_id: r.pair_id,
            tokens: Vec::new(),
            qrels: BTreeMap::new(),
        }
    }

    fn to_record(&self) -> Record {
        Record {
            id: self.id.clone(),
            text: self.text.clone(),
            source: self.source.clone(),
            pair_id: self.pair_id.clone(),
        }
    }
}

/// How raw text is split into candidate tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenRule {
    /// Split on every maximal run of non-alphanumeric characters.
    #[default]
    NonAlphanumeric,
    /// Split on Unicode whitespace only.
    Whitespace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub lowercase: bool,
    /// Porter stemming.
    pub stem: bool,
    pub remove_stopwords: bool,
    /// Replacement stop list; `None` uses [`stopwords::ENGLISH`].
    pub stopwords: Option<Vec<String>>,
    pub token_rule: TokenRule,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lowercase: true,
            stem: false,
            remove_stopwords: false,
            stopwords: None,
            token_rule: TokenRule::NonAlphanumeric,
        }
    }
}

impl PipelineConfig {
    /// Porter stemming plus stop-word removal.
    pub fn stemmed() -> Self {
        PipelineConfig {
            stem: true,
            remove_stopwords: true,
            ..Default::default()
        }
    }

    /// Read a stop list (one term per line, `#` comments allowed).
    pub fn load_stopwords(path: &Path) -> Result<Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect())
    }
}

/// A [`PipelineConfig`] with its stop list prepared for lookup.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    cfg: PipelineConfig,
    stop: HashSet<String>,
}

impl Tokenizer {
    pub fn new(cfg: &PipelineConfig) -> Self {
        let stop = if cfg.remove_stopwords {
            // Stop words are matched after stemming, so the list goes through
            // the same normalization as the tokens.
            let raw: Vec<String> = match &cfg.stopwords {
                Some(list) => list.clone(),
                None => stopwords::ENGLISH.iter().map(|s| s.to_string()).collect(),
            };
            raw.iter().map(|w| normalize_token(w, cfg)).collect()
        } else {
            HashSet::new()
        };
        Tokenizer {
            cfg: cfg.clone(),
            stop,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let normalized: String = if self.cfg.lowercase {
            text.nfc().collect::<String>().to_lowercase().nfc().collect()
        } else {
            text.nfc().collect()
        };
        let pieces: Vec<&str> = match self.cfg.token_rule {
            TokenRule::NonAlphanumeric => normalized
                .split(|c: char| !c.is_alphanumeric())
                .filter(|s| !s.is_empty())
                .collect(),
            TokenRule::Whitespace => normalized.split_whitespace().collect(),
        };
        pieces
            .into_iter()
            .map(|p| {
                if self.cfg.stem {
                    porter::stem(p)
                } else {
                    p.to_string()
                }
            })
            .filter(|t| !self.stop.contains(t))
            .collect()
    }
}

fn normalize_token(word: &str, cfg: &PipelineConfig) -> String {
    let w: String = if cfg.lowercase {
        word.nfc().collect::<String>().to_lowercase()
    } else {
        word.nfc().collect()
    };
    if cfg.stem {
        porter::stem(&w)
    } else {
        w
    }
}

/// Tokenize a single text. Prefer [`Tokenizer`] when processing many texts.
pub fn tokenize(text: &str, cfg: &PipelineConfig) -> Vec<String> {
    Tokenizer::new(cfg).tokenize(text)
}

fn read_records<R: Read>(reader: R) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateKey(rec.id));
        }
        out.push(rec);
    }
    Ok(out)
}

fn write_records<W: Write>(mut w: W, records: impl Iterator<Item = Record>) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// An ordered, id-unique collection of documents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    pipeline: Option<PipelineConfig>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &docs {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::DuplicateKey(d.id.clone()));
            }
        }
        Ok(Corpus { docs, pipeline: None })
    }

    /// Wrap documents whose `tokens` were produced elsewhere (e.g. by a generator).
    pub fn pretokenized(docs: Vec<Document>, pipeline: PipelineConfig) -> Result<Self> {
        let mut c = Corpus::new(docs)?;
        c.pipeline = Some(pipeline);
        Ok(c)
    }

    pub fn from_jsonl<R: Read>(reader: R) -> Result<Self> {
        let docs = read_records(reader)?.into_iter().map(Document::from_record).collect();
        Ok(Corpus { docs, pipeline: None })
    }

    pub fn write_jsonl<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_records(w, self.docs.iter().map(Document::to_record))
    }

    /// Concatenate corpora, e.g. a human and an LLM corpus into one mixed pool.
    pub fn merge(parts: impl IntoIterator<Item = Corpus>) -> Result<Self> {
        let mut docs = Vec::new();
        let mut pipeline: Option<Option<PipelineConfig>> = None;
        for part in parts {
            pipeline = match pipeline {
                None => Some(part.pipeline.clone()),
                Some(p) if p == part.pipeline => Some(p),
                Some(_) => Some(None),
            };
            docs.extend(part.docs);
        }
        let mut merged = Corpus::new(docs)?;
        merged.pipeline = pipeline.flatten();
        Ok(merged)
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.docs.iter().find(|d| d.id == id)
    }

    /// The pipeline the tokens were produced with, if tokenized.
    pub fn pipeline(&self) -> Option<&PipelineConfig> {
        self.pipeline.as_ref()
    }

    pub fn is_tokenized(&self) -> bool {
        self.pipeline.is_some()
    }

    pub fn tokenize(&mut self, cfg: &PipelineConfig) {
        let tok = Tokenizer::new(cfg);
        self.docs
            .par_iter_mut()
            .for_each(|d| d.tokens = tok.tokenize(&d.text));
        self.pipeline = Some(cfg.clone());
    }

    pub fn tokenized(mut self, cfg: &PipelineConfig) -> Self {
        self.tokenize(cfg);
        self
    }

    /// Keep only documents from `source`.
    pub fn filter_source(&self, source: &Source) -> Corpus {
        Corpus {
            docs: self.docs.iter().filter(|d| &d.source == source).cloned().collect(),
            pipeline: self.pipeline.clone(),
        }
    }

    /// All tokens of all documents, in document order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().flat_map(|d| d.tokens.iter().map(String::as_str))
    }

    /// Human/LLM pairs. A document's pairing key is its `pair_id` when set and
    /// its own `id` otherwise; a key shared by exactly one human and one LLM
    /// document forms a pair. Output is sorted by key.
    pub fn pairs(&self) -> Vec<DocPair<'_>> {
        let mut groups: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
        for d in &self.docs {
            let key = d.pair_id.as_deref().unwrap_or(&d.id);
            groups.entry(key).or_default().push(d);
        }
        groups
            .into_iter()
            .filter_map(|(key, members)| {
                let human: Vec<_> = members.iter().filter(|d| d.source == Source::Human).collect();
                let llm: Vec<_> = members.iter().filter(|d| d.source == Source::Llm).collect();
                match (human.as_slice(), llm.as_slice()) {
                    ([h], [l]) => Some(DocPair { key, human: h, llm: l }),
                    _ => None,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DocPair<'a> {
    pub key: &'a str,
    pub human: &'a Document,
    pub llm: &'a Document,
}

pub fn ingest_corpus(path: &Path) -> Result<Corpus> {
    Corpus::from_jsonl(open(path)?)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuerySet {
    queries: Vec<Query>,
    pipeline: Option<PipelineConfig>,
}

impl QuerySet {
    pub fn new(queries: Vec<Query>) -> Result<Self> {
        let mut seen = HashSet::new();
        for q in &queries {
            if !seen.insert(q.id.as_str()) {
                return Err(Error::DuplicateKey(q.id.clone()));
            }
        }
        Ok(QuerySet {
            queries,
            pipeline: None,
        })
    }

    pub fn pretokenized(queries: Vec<Query>, pipeline: PipelineConfig) -> Result<Self> {
        let mut s = QuerySet::new(queries)?;
        s.pipeline = Some(pipeline);
        Ok(s)
    }

    pub fn from_jsonl<R: Read>(reader: R) -> Result<Self> {
        let queries = read_records(reader)?.into_iter().map(Query::from_record).collect();
        Ok(QuerySet {
            queries,
            pipeline: None,
        })
    }

    pub fn write_jsonl<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_records(w, self.queries.iter().map(Query::to_record))
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn is_tokenized(&self) -> bool {
        self.pipeline.is_some()
    }

    pub fn tokenize(&mut self, cfg: &PipelineConfig) {
        let tok = Tokenizer::new(cfg);
        self.queries
            .par_iter_mut()
            .for_each(|q| q.tokens = tok.tokenize(&q.text));
        self.pipeline = Some(cfg.clone());
    }

    pub fn tokenized(mut self, cfg: &PipelineConfig) -> Self {
        self.tokenize(cfg);
        self
    }

    /// Copy judgments onto matching queries. Judgments for unknown query ids
    /// are ignored.
    pub fn attach_qrels(&mut self, qrels: &Qrels) {
        for q in &mut self.queries {
            if let Some(j) = qrels.get(&q.id) {
                q.qrels = j.clone();
            }
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.queries.iter().flat_map(|q| q.tokens.iter().map(String::as_str))
    }

    /// Mean query length in tokens (`L_q`); 0 for an empty set.
    pub fn mean_length(&self) -> f64 {
        if self.queries.is_empty() {
            return 0.0;
        }
        let total: usize = self.queries.iter().map(|q| q.tokens.len()).sum();
        total as f64 / self.queries.len() as f64
    }
}

pub fn ingest_queries(path: &Path) -> Result<QuerySet> {
    QuerySet::from_jsonl(open(path)?)
}

/// Relevance judgments: query id -> doc id -> grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels(BTreeMap<String, BTreeMap<String, u32>>);

impl Qrels {
    pub fn from_trec<R: Read>(reader: R) -> Result<Self> {
        let mut map: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let line = line.map_err(|e| parse_err(e.to_string()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _iter, docid, grade] = fields.as_slice() else {
                return Err(parse_err(format!(
                    "expected `qid 0 docid grade`, got {} fields",
                    fields.len()
                )));
            };
            let grade: u32 = grade
                .parse()
                .map_err(|_| parse_err(format!("grade {grade:?} is not a non-negative integer")))?;
            map.entry(qid.to_string())
                .or_default()
                .insert(docid.to_string(), grade);
        }
        Ok(Qrels(map))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Qrels::from_trec(open(path)?)
    }

    pub fn get(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.0.get(qid)
    }

    pub fn insert(&mut self, qid: &str, docid: &str, grade: u32) {
        self.0
            .entry(qid.to_string())
            .or_default()
            .insert(docid.to_string(), grade);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeMap<String, u32>)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexicalSimilarity {
    pub jaccard: f64,
    /// |A ∩ B| / |B|, where B is the human reference.
    pub overlap: f64,
}

/// Jaccard similarity and overlap between the token sets of `candidate` and
/// the human `reference`. Overlap is 0 when the reference is empty but the
/// candidate is not.
pub fn lexical_similarity<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Result<LexicalSimilarity> {
    let a: BTreeSet<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let b: BTreeSet<&str> = reference.iter().map(AsRef::as_ref).collect();
    if a.is_empty() && b.is_empty() {
        return Err(Error::UndefinedInput(
            "lexical similarity of two empty token sets".into(),
        ));
    }
    let inter = a.intersection(&b).count() as f64;
    let union = a.union(&b).count() as f64;
    let overlap = if b.is_empty() { 0.0 } else { inter / b.len() as f64 };
    Ok(LexicalSimilarity {
        jaccard: inter / union,
        overlap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSimilarity {
    pub key: String,
    pub human_id: String,
    pub llm_id: String,
    pub similarity: LexicalSimilarity,
}

/// Lexical similarity of every human/LLM pair; pairs whose token sets are
/// both empty are skipped.
pub fn pair_similarities(corpus: &Corpus) -> Result<Vec<PairSimilarity>> {
    if !corpus.is_tokenized() {
        return Err(Error::State("corpus must be tokenized".into()));
    }
    Ok(corpus
        .pairs()
        .into_iter()
        .filter_map(|p| {
            lexical_similarity(&p.llm.tokens, &p.human.tokens)
                .ok()
                .map(|similarity| PairSimilarity {
                    key: p.key.to_string(),
                    human_id: p.human.id.clone(),
                    llm_id: p.llm.id.clone(),
                    similarity,
                })
        })
        .collect())
}

/// Count tokens into a term -> frequency map.
pub fn term_counts<'a>(tokens: impl IntoIterator<Item = &'a str>) -> HashMap<&'a str, u64> {
    let mut counts = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
}

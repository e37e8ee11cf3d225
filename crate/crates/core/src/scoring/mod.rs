//! Term-based relevance functions and exact top-k retrieval.
//!
//! | model       | per query token `w`                                                        |
//! |-------------|----------------------------------------------------------------------------|
//! | `tfidf`     | cosine of `tf * ln(N/df)` vectors (not additive)                           |
//! | `bm25`      | `ln((N-df+0.5)/(df+0.5)) * (k1+1) tf / (k1 ((1-b) + b |d|/avgdl) + tf)`     |
//! | `ql_jm`     | `ln((1-λ) tf/|d| + λ cf/T)`                                                |
//! | `dfr_inlh2` | `tfn log2((N+1)/(df+0.5)) / (tfn+1)`, `tfn = tf log2(1 + c avgdl/|d|)`      |
//!
//! Additive models sum over query tokens, so a term repeated in the query
//! counts once per occurrence. Natural logs everywhere except the DFR
//! components, which are base 2. The BM25 idf is not floored: terms in more
//! than half the collection get a negative weight.

pub mod trec;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Query, QuerySet, Source};
use crate::error::{Error, Result};
use crate::index::{DocId, Index, TermId};

pub use trec::SourceMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Tfidf,
    Bm25,
    QlJm,
    DfrInlh2,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Tfidf, Model::Bm25, Model::QlJm, Model::DfrInlh2];

    pub fn name(self) -> &'static str {
        match self {
            Model::Tfidf => "tfidf",
            Model::Bm25 => "bm25",
            Model::QlJm => "ql_jm",
            Model::DfrInlh2 => "dfr_inlh2",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "tfidf" | "tf_idf" => Ok(Model::Tfidf),
            "bm25" => Ok(Model::Bm25),
            "ql" | "ql_jm" | "qljm" => Ok(Model::QlJm),
            "dfr" | "dfr_inlh2" | "inlh2" | "inl2" => Ok(Model::DfrInlh2),
            other => Err(Error::InvalidConfig(format!("unknown scorer {other:?}"))),
        }
    }
}

/// Scorer parameters. The defaults are the usual toolkit settings:
/// `k1 = 0.9`, `b = 0.4`, `λ = 0.1`, `c = 1.0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerConfig {
    pub model: Model,
    pub k1: f64,
    pub b: f64,
    /// Weight of the collection model in Jelinek-Mercer smoothing.
    pub lambda: f64,
    /// DFR length-normalization constant.
    pub c: f64,
    /// Accepted for compatibility with DFR toolkit configs; no formula reads it.
    pub z: f64,
    /// `false` switches DFR to plain InL2 (`tfn = tf`).
    pub dfr_length_normalization: bool,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            model: Model::Bm25,
            k1: 0.9,
            b: 0.4,
            lambda: 0.1,
            c: 1.0,
            z: 0.3,
            dfr_length_normalization: true,
        }
    }
}

impl ScorerConfig {
    pub fn new(model: Model) -> Self {
        ScorerConfig {
            model,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidConfig(what));
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return bad(format!("k1 must be positive, got {}", self.k1));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return bad(format!("b must lie in [0, 1], got {}", self.b));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        Ok(())
    }
}

/// Query tokens resolved against an index, grouped by term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTerms {
    /// (term, occurrences in the query), sorted by term id.
    pub known: Vec<(TermId, u32)>,
    /// Query terms that never occur in the collection, sorted and deduplicated.
    pub unseen: Vec<String>,
}

impl QueryTerms {
    pub fn resolve<S: AsRef<str>>(index: &Index, tokens: &[S]) -> Self {
        let mut known: Vec<(TermId, u32)> = Vec::new();
        let mut unseen: Vec<String> = Vec::new();
        let mut ids: Vec<TermId> = Vec::with_capacity(tokens.len());
        for t in tokens {
            match index.term_id(t.as_ref()) {
                Some(id) => ids.push(id),
                None => unseen.push(t.as_ref().to_string()),
            }
        }
        ids.sort_unstable();
        for id in ids {
            match known.last_mut() {
                Some((last, n)) if *last == id => *n += 1,
                _ => known.push((id, 1)),
            }
        }
        unseen.sort();
        unseen.dedup();
        QueryTerms { known, unseen }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfidfScore {
    pub value: f64,
    /// The query or document has no weighted term; `value` is 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QlScore {
    /// `-inf` when some query term never occurs in the collection.
    pub value: f64,
    pub unseen_terms: Vec<String>,
}

/// A scorer bound to one index.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    index: &'a Index,
    cfg: ScorerConfig,
    /// Per-document TF-IDF norms, filled for the TF-IDF model only.
    doc_norms: Vec<f64>,
}

impl<'a> Scorer<'a> {
    pub fn new(index: &'a Index, cfg: ScorerConfig) -> Result<Self> {
        cfg.validate()?;
        let doc_norms = if cfg.model == Model::Tfidf {
            index
                .doc_ids()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|&d| {
                    index
                        .doc_terms(d)
                        .iter()
                        .map(|&(t, tf)| {
                            let w = f64::from(tf) * tfidf_idf(index, t);
                            w * w
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Scorer {
            index,
            cfg,
            doc_norms,
        })
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.cfg
    }

    pub fn index(&self) -> &Index {
        self.index
    }

    /// Score of one document. For QL, a collection-unseen query term yields
    /// `-inf`; the other models ignore such terms.
    pub fn score(&self, q: &QueryTerms, d: DocId) -> f64 {
        match self.cfg.model {
            Model::Tfidf => self.tfidf(q, d).value,
            Model::QlJm if !q.unseen.is_empty() => f64::NEG_INFINITY,
            _ => self.contributions(q, d).iter().map(|&(_, c)| c).sum(),
        }
    }

    pub fn tfidf(&self, q: &QueryTerms, d: DocId) -> TfidfScore {
        let (mut dot, mut q_sq) = (0.0, 0.0);
        for &(t, qtf) in &q.known {
            let idf = tfidf_idf(self.index, t);
            let wq = f64::from(qtf) * idf;
            q_sq += wq * wq;
            dot += wq * f64::from(self.index.tf(t, d)) * idf;
        }
        let norm = q_sq.sqrt() * self.doc_norm(d);
        if norm == 0.0 {
            return TfidfScore {
                value: 0.0,
                degenerate: true,
            };
        }
        TfidfScore {
            value: (dot / norm).clamp(0.0, 1.0),
            degenerate: false,
        }
    }

    fn doc_norm(&self, d: DocId) -> f64 {
        match self.doc_norms.get(d as usize) {
            Some(&n) => n,
            None => self
                .index
                .doc_terms(d)
                .iter()
                .map(|&(t, tf)| (f64::from(tf) * tfidf_idf(self.index, t)).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Per-term contributions of an additive model (one entry per distinct
    /// known query term, already multiplied by its query count). Empty for
    /// TF-IDF.
    pub fn contributions(&self, q: &QueryTerms, d: DocId) -> Vec<(TermId, f64)> {
        if self.cfg.model == Model::Tfidf {
            return Vec::new();
        }
        q.known
            .iter()
            .map(|&(t, qtf)| (t, f64::from(qtf) * self.term_weight(t, d)))
            .collect()
    }

    fn term_weight(&self, t: TermId, d: DocId) -> f64 {
        let idx = self.index;
        let tf = f64::from(idx.tf(t, d));
        let n = idx.n_docs() as f64;
        let df = idx.df(t) as f64;
        let dl = f64::from(idx.doc_len(d));
        match self.cfg.model {
            Model::Tfidf => unreachable!("tfidf is not additive"),
            Model::Bm25 => {
                if tf == 0.0 {
                    return 0.0;
                }
                let idf = ((n - df + 0.5) / (df + 0.5)).ln();
                let k = self.cfg.k1 * ((1.0 - self.cfg.b) + self.cfg.b * dl / idx.avgdl());
                idf * (self.cfg.k1 + 1.0) * tf / (k + tf)
            }
            Model::QlJm => {
                let lambda = self.cfg.lambda;
                let ml = if dl > 0.0 { tf / dl } else { 0.0 };
                let coll = idx.cf(t) as f64 / idx.total_tokens() as f64;
                ((1.0 - lambda) * ml + lambda * coll).ln()
            }
            Model::DfrInlh2 => {
                if tf == 0.0 {
                    return 0.0;
                }
                let tfn = if self.cfg.dfr_length_normalization {
                    tf * (1.0 + self.cfg.c * idx.avgdl() / dl).log2()
                } else {
                    tf
                };
                tfn * ((n + 1.0) / (df + 0.5)).log2() / (tfn + 1.0)
            }
        }
    }

    /// Exact top-k. Candidates are the documents sharing at least one query
    /// term; for every model but QL, candidates scoring exactly 0 are dropped.
    /// QL ignores collection-unseen terms here (they would add the same
    /// `-inf` to every document) and reports them on the list.
    pub fn search(&self, query_id: &str, q: &QueryTerms, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        let mut candidates: Vec<DocId> = q
            .known
            .iter()
            .flat_map(|&(t, _)| self.index.postings(t).iter().map(|p| p.doc))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        let scoring_terms = QueryTerms {
            known: q.known.clone(),
            unseen: Vec::new(),
        };
        let mut scored: Vec<(DocId, f64)> = candidates
            .into_iter()
            .map(|d| (d, self.score(&scoring_terms, d)))
            .filter(|&(_, s)| self.cfg.model == Model::QlJm || s != 0.0)
            .collect();
        scored.sort_by(|a, b| rank_order(a.1, b.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(RankedList {
            query_id: query_id.to_string(),
            depth: k,
            entries: scored
                .into_iter()
                .map(|(d, score)| RankedEntry {
                    doc_id: self.index.doc_id(d).to_string(),
                    score,
                    source: self.index.doc_source(d).clone(),
                })
                .collect(),
            unseen_terms: if self.cfg.model == Model::QlJm {
                q.unseen.clone()
            } else {
                Vec::new()
            },
        })
    }
}

/// Descending score order with NaN last.
fn rank_order(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

fn tfidf_idf(index: &Index, t: TermId) -> f64 {
    (index.n_docs() as f64 / index.df(t) as f64).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
    pub source: Source,
}

/// One query's ranking: scores non-increasing, ties by doc id ascending,
/// at most `depth` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    pub depth: usize,
    pub entries: Vec<RankedEntry>,
    /// QL only: query terms absent from the collection.
    pub unseen_terms: Vec<String>,
}

impl RankedList {
    pub fn sources(&self) -> Vec<Source> {
        self.entries.iter().map(|e| e.source.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn doc_ordinal(index: &Index, doc_id: &str) -> Result<DocId> {
    index
        .doc_ordinal(doc_id)
        .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
}

pub fn score_tfidf<S: AsRef<str>>(query: &[S], doc_id: &str, index: &Index) -> Result<TfidfScore> {
    let scorer = Scorer {
        index,
        cfg: ScorerConfig::new(Model::Tfidf),
        doc_norms: Vec::new(),
    };
    Ok(scorer.tfidf(&QueryTerms::resolve(index, query), doc_ordinal(index, doc_id)?))
}

pub fn score_bm25<S: AsRef<str>>(query: &[S], doc_id: &str, index: &Index, cfg: &ScorerConfig) -> Result<f64> {
    score_additive(Model::Bm25, query, doc_id, index, cfg)
}

pub fn score_dfr<S: AsRef<str>>(query: &[S], doc_id: &str, index: &Index, cfg: &ScorerConfig) -> Result<f64> {
    score_additive(Model::DfrInlh2, query, doc_id, index, cfg)
}

pub fn score_ql<S: AsRef<str>>(query: &[S], doc_id: &str, index: &Index, cfg: &ScorerConfig) -> Result<QlScore> {
    let q = QueryTerms::resolve(index, query);
    let value = score_additive(Model::QlJm, query, doc_id, index, cfg)?;
    Ok(QlScore {
        value,
        unseen_terms: q.unseen,
    })
}

fn score_additive<S: AsRef<str>>(
    model: Model,
    query: &[S],
    doc_id: &str,
    index: &Index,
    cfg: &ScorerConfig,
) -> Result<f64> {
    let cfg = ScorerConfig { model, ..*cfg };
    let scorer = Scorer::new(index, cfg)?;
    Ok(scorer.score(&QueryTerms::resolve(index, query), doc_ordinal(index, doc_id)?))
}

pub fn search_topk(query: &Query, index: &Index, cfg: &ScorerConfig, k: usize) -> Result<RankedList> {
    let scorer = Scorer::new(index, *cfg)?;
    scorer.search(&query.id, &QueryTerms::resolve(index, &query.tokens), k)
}

/// Rank every query; output order follows the query set.
pub fn search_all(queries: &QuerySet, index: &Index, cfg: &ScorerConfig, k: usize) -> Result<Vec<RankedList>> {
    if !queries.is_tokenized() {
        return Err(Error::State("queries must be tokenized".into()));
    }
    let scorer = Scorer::new(index, *cfg)?;
    queries
        .queries()
        .par_iter()
        .map(|q| scorer.search(&q.id, &QueryTerms::resolve(index, &q.tokens), k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document, PipelineConfig};
    use crate::index::build_index;

    fn index(docs: &[(&str, &str)]) -> Index {
        let c = Corpus::new(
            docs.iter()
                .map(|(id, t)| Document::new(*id, *t, Source::Human))
                .collect(),
        )
        .unwrap()
        .tokenized(&PipelineConfig::default());
        build_index(&c).unwrap()
    }

    fn three() -> Index {
        index(&[
            ("d1", "apple banana apple"),
            ("d2", "banana cherry"),
            ("d3", "cherry cherry"),
        ])
    }

    const APPLE: &[&str] = &["apple"];

    #[test]
    fn tfidf_three_doc_value() {
        // 2 ln 3 / sqrt((2 ln 3)^2 + ln(3/2)^2)
        let s = score_tfidf(APPLE, "d1", &three()).unwrap();
        assert!((s.value - 0.983_396_268_620_918).abs() < 1e-12);
        assert!(!s.degenerate);
    }

    #[test]
    fn tfidf_identity_and_orthogonal() {
        let idx = three();
        let s = score_tfidf(&["apple", "banana", "apple"], "d1", &idx).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        let s = score_tfidf(&["cherry"], "d1", &idx).unwrap();
        assert_eq!(s.value, 0.0);
        let s = score_tfidf(&["durian"], "d1", &idx).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn bm25_three_doc_value() {
        let v = score_bm25(APPLE, "d1", &three(), &ScorerConfig::default()).unwrap();
        assert!((v - 0.646_430_142_348_970).abs() < 1e-12);
        assert_eq!(score_bm25(APPLE, "d2", &three(), &ScorerConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn bm25_zero_idf_at_half_collection() {
        let idx = index(&[("d1", "x y"), ("d2", "y")]);
        assert_eq!(score_bm25(&["x"], "d1", &idx, &ScorerConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn bm25_negative_idf_is_kept() {
        let idx = index(&[("d1", "x"), ("d2", "x"), ("d3", "y")]);
        assert!(score_bm25(&["x"], "d1", &idx, &ScorerConfig::default()).unwrap() < 0.0);
    }

    #[test]
    fn ql_three_doc_value() {
        let s = score_ql(APPLE, "d1", &three(), &ScorerConfig::default()).unwrap();
        assert!((s.value - (0.9f64 * 2.0 / 3.0 + 0.1 * 2.0 / 7.0).ln()).abs() < 1e-15);
        assert!((s.value + 0.464_305_608_131_098).abs() < 1e-12);
        assert!(s.unseen_terms.is_empty());
    }

    #[test]
    fn ql_single_term_collection_scores_zero() {
        let idx = index(&[("d1", "w w w")]);
        assert_eq!(score_ql(&["w"], "d1", &idx, &ScorerConfig::default()).unwrap().value, 0.0);
    }

    #[test]
    fn ql_absent_in_doc_uses_collection_model() {
        let s = score_ql(APPLE, "d2", &three(), &ScorerConfig::default()).unwrap();
        assert!((s.value - (0.1f64 * 2.0 / 7.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn ql_unseen_term_is_negative_infinity() {
        let s = score_ql(&["apple", "zzz"], "d1", &three(), &ScorerConfig::default()).unwrap();
        assert_eq!(s.value, f64::NEG_INFINITY);
        assert_eq!(s.unseen_terms, vec!["zzz".to_string()]);
    }

    #[test]
    fn dfr_three_doc_value() {
        let v = score_dfr(APPLE, "d1", &three(), &ScorerConfig::default()).unwrap();
        assert!((v - 0.883_098_510_570_204).abs() < 1e-12);
        assert_eq!(score_dfr(APPLE, "d3", &three(), &ScorerConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn dfr_normalization_identity_at_average_length() {
        // |d| = avgdl and c = 1 gives tfn = tf.
        let idx = index(&[("d1", "x x y"), ("d2", "y z z")]);
        let h2 = score_dfr(&["x"], "d1", &idx, &ScorerConfig::default()).unwrap();
        let plain = score_dfr(
            &["x"],
            "d1",
            &idx,
            &ScorerConfig {
                dfr_length_normalization: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((h2 - plain).abs() < 1e-15);
        assert!((plain - 2.0 * (3.0f64 / 1.5).log2() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        for bad in [
            ScorerConfig { k1: 0.0, ..Default::default() },
            ScorerConfig { b: 1.5, ..Default::default() },
            ScorerConfig { lambda: -0.1, ..Default::default() },
            ScorerConfig { c: 0.0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
        assert!(ScorerConfig::default().validate().is_ok());
    }

    #[test]
    fn model_names_parse() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert_eq!("DFR".parse::<Model>().unwrap(), Model::DfrInlh2);
        assert!("lm".parse::<Model>().is_err());
    }

    #[test]
    fn topk_bm25_drops_unmatched() {
        let mut q = Query::new("q1", "apple", Source::Human);
        q.tokens = vec!["apple".into()];
        let list = search_topk(&q, &three(), &ScorerConfig::default(), 3).unwrap();
        assert_eq!(list.entries.len(), 1);
        assert_eq!(list.entries[0].doc_id, "d1");
        assert!((list.entries[0].score - 0.6464).abs() < 5e-5);
    }

    #[test]
    fn topk_ties_by_doc_id() {
        let idx = index(&[("b", "x y"), ("a", "x y"), ("c", "z")]);
        let mut q = Query::new("q", "x", Source::Human);
        q.tokens = vec!["x".into()];
        for m in Model::ALL {
            let list = search_topk(&q, &idx, &ScorerConfig::new(m), 5).unwrap();
            let ids: Vec<_> = list.entries.iter().map(|e| e.doc_id.as_str()).collect();
            assert_eq!(ids, ["a", "b"], "{m}");
        }
    }

    #[test]
    fn topk_single_doc_and_k_zero() {
        let idx = index(&[("only", "x")]);
        let mut q = Query::new("q", "x", Source::Human);
        q.tokens = vec!["x".into()];
        let list = search_topk(&q, &idx, &ScorerConfig::new(Model::QlJm), 1).unwrap();
        assert_eq!(list.entries[0].doc_id, "only");
        assert!(search_topk(&q, &idx, &ScorerConfig::default(), 0).is_err());
    }

    #[test]
    fn bm25_gain_is_increasing_concave_and_bounded() {
        let cfg = ScorerConfig::default();
        let gain = |tf: f64| (cfg.k1 + 1.0) * tf / (cfg.k1 + tf);
        let g: Vec<f64> = (0..=50).map(|t| gain(t as f64)).collect();
        for t in 1..50 {
            assert!(g[t + 1] > g[t]);
            assert!(g[t + 1] - 2.0 * g[t] + g[t - 1] < 0.0);
            assert!(g[t] < cfg.k1 + 1.0);
        }
        // the scorer uses the same gain at |d| = avgdl
        let idx = index(&[("d1", "x x x y"), ("d2", "y y z z"), ("d3", "z z y y")]);
        let idf = (2.5f64 / 1.5).ln();
        let v = score_bm25(&["x"], "d1", &idx, &cfg).unwrap();
        assert!((v - idf * gain(3.0)).abs() < 1e-12);
    }

    #[test]
    fn ql_increases_with_tf() {
        let cfg = ScorerConfig::new(Model::QlJm);
        let a = index(&[("d1", "x y y y"), ("d2", "x z z z")]);
        let b = index(&[("d1", "x x y y"), ("d2", "x z z z")]);
        let sa = score_ql(&["x"], "d1", &a, &cfg).unwrap().value;
        let sb = score_ql(&["x"], "d1", &b, &cfg).unwrap().value;
        assert!(sb > sa);
    }
}

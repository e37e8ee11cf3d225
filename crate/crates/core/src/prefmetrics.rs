//! Source-preference metrics over ranked lists (SR@k, NDSR@k, MASR),
//! relevance metrics with per-source filtering, relative differences and a
//! paired sign-flip permutation test.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::corpus::{Qrels, Source};
use crate::error::{Error, Result};
use crate::rng;
use crate::scoring::{RankedList, SourceMap};

/// Default number of resamples for [`paired_significance`].
pub const DEFAULT_RESAMPLES: usize = 10_000;

/// Position weight `1 / log2(1 + i)` for 1-based rank `i`.
pub fn position_weight(i: usize) -> f64 {
    1.0 / ((1 + i) as f64).log2()
}

/// A cutoff metric evaluated at `min(k, list length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtK {
    pub value: f64,
    /// Depth actually used.
    pub depth: usize,
    /// The list was shorter than the requested cutoff.
    pub truncated: bool,
}

fn cutoff(len: usize, k: usize) -> Result<(usize, bool)> {
    if k == 0 {
        return Err(Error::Domain("cutoff k must be at least 1".into()));
    }
    if len == 0 {
        return Err(Error::UndefinedInput("source ratio of an empty list".into()));
    }
    Ok((k.min(len), len < k))
}

pub fn sr_at_k(sources: &[Source], s: &Source, k: usize) -> Result<AtK> {
    let (depth, truncated) = cutoff(sources.len(), k)?;
    let hits = sources[..depth].iter().filter(|x| *x == s).count();
    Ok(AtK {
        value: hits as f64 / depth as f64,
        depth,
        truncated,
    })
}

pub fn ndsr_at_k(sources: &[Source], s: &Source, k: usize) -> Result<AtK> {
    let (depth, truncated) = cutoff(sources.len(), k)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, x) in sources[..depth].iter().enumerate() {
        let w = position_weight(i + 1);
        den += w;
        if x == s {
            num += w;
        }
    }
    Ok(AtK {
        value: num / den,
        depth,
        truncated,
    })
}

/// Mean of `SR_s@i` over the positions `i` holding a source-`s` document;
/// `None` when the list has none.
pub fn masr(sources: &[Source], s: &Source) -> Option<f64> {
    let (mut hits, mut acc) = (0usize, 0.0);
    for (i, x) in sources.iter().enumerate() {
        if x == s {
            hits += 1;
            acc += hits as f64 / (i + 1) as f64;
        }
    }
    (hits > 0).then(|| acc / hits as f64)
}

/// Per-position DCG gains `grade_i / log2(1 + i)`.
pub fn dcg_contributions(grades: &[u32]) -> Vec<f64> {
    grades
        .iter()
        .enumerate()
        .map(|(i, &g)| f64::from(g) * position_weight(i + 1))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelevanceMode<'a> {
    Mixed,
    /// Documents from other sources count as non-relevant but keep their
    /// ranks; the ideal ranking and the relevant count use only judged
    /// documents of this source.
    SourceFiltered { source: &'a Source, sources: &'a SourceMap },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelevanceMetrics {
    pub precision_at_k: f64,
    pub ndcg_at_k: f64,
    pub map: f64,
    /// No positively judged document under the mode; all metrics are 0.
    pub unjudged: bool,
}

/// P@k, NDCG@k (gain = grade, log2 discount) and average precision over the
/// whole list. P@k divides by `k` even when the list is shorter.
pub fn relevance_metrics(
    list: &RankedList,
    qrels: &BTreeMap<String, u32>,
    mode: RelevanceMode<'_>,
    k: usize,
) -> Result<RelevanceMetrics> {
    if k == 0 {
        return Err(Error::Domain("cutoff k must be at least 1".into()));
    }
    if qrels.is_empty() {
        return Err(Error::EmptyInput(format!("no judgments for query {}", list.query_id)));
    }
    let judged: Vec<u32> = qrels
        .iter()
        .filter(|(doc, _)| match mode {
            RelevanceMode::Mixed => true,
            RelevanceMode::SourceFiltered { source, sources } => sources.get(doc) == Some(source),
        })
        .map(|(_, &g)| g)
        .filter(|&g| g > 0)
        .collect();
    if judged.is_empty() {
        return Ok(RelevanceMetrics {
            precision_at_k: 0.0,
            ndcg_at_k: 0.0,
            map: 0.0,
            unjudged: true,
        });
    }
    let grades: Vec<u32> = list
        .entries
        .iter()
        .map(|e| {
            let keep = match mode {
                RelevanceMode::Mixed => true,
                RelevanceMode::SourceFiltered { source, .. } => &e.source == source,
            };
            if keep {
                qrels.get(&e.doc_id).copied().unwrap_or(0)
            } else {
                0
            }
        })
        .collect();

    let depth = k.min(grades.len());
    let precision_at_k = grades[..depth].iter().filter(|&&g| g > 0).count() as f64 / k as f64;

    let dcg: f64 = dcg_contributions(&grades[..depth]).iter().sum();
    let mut ideal = judged.clone();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    ideal.truncate(k);
    let idcg: f64 = dcg_contributions(&ideal).iter().sum();

    let (mut hits, mut ap) = (0usize, 0.0);
    for (i, &g) in grades.iter().enumerate() {
        if g > 0 {
            hits += 1;
            ap += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(RelevanceMetrics {
        precision_at_k,
        ndcg_at_k: dcg / idcg,
        map: ap / judged.len() as f64,
        unjudged: false,
    })
}

/// `(h - l) / ((h + l) / 2)`; `None` when both are zero.
pub fn relative_delta(h: f64, l: f64) -> Option<f64> {
    let mid = (h + l) / 2.0;
    (mid != 0.0).then(|| (h - l) / mid)
}

/// Two-sided paired sign-flip permutation test on `a - b` with statistic
/// `|mean|`. All `2^n` sign patterns are enumerated when that is at most
/// `resamples`; otherwise `resamples` random patterns are drawn and
/// `p = (1 + hits) / (1 + resamples)`.
pub fn paired_significance(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::UndefinedInput(format!("paired test needs at least 2 pairs, got {n}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let observed = d.iter().sum::<f64>().abs();
    let tol = 1e-9 * observed.max(d.iter().map(|x| x.abs()).sum::<f64>()).max(1e-300);
    let at_least = |s: f64| s.abs() >= observed - tol;

    if n < 63 && (1u64 << n) <= resamples as u64 {
        let total = 1u64 << n;
        let hits = (0..total)
            .filter(|mask| {
                let s: f64 = d
                    .iter()
                    .enumerate()
                    .map(|(i, x)| if mask >> i & 1 == 1 { -x } else { *x })
                    .sum();
                at_least(s)
            })
            .count();
        return Ok(hits as f64 / total as f64);
    }
    let resamples = resamples.max(1);
    let mut r = rng::stream(seed, 0);
    let mut hits = 0usize;
    for _ in 0..resamples {
        let s: f64 = d.iter().map(|x| if r.random::<bool>() { -x } else { *x }).sum();
        if at_least(s) {
            hits += 1;
        }
    }
    Ok((1 + hits) as f64 / (1 + resamples) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPreference {
    pub query_id: String,
    pub sr_human: f64,
    pub sr_llm: f64,
    pub ndsr_human: f64,
    pub ndsr_llm: f64,
    pub masr_human: Option<f64>,
    pub masr_llm: Option<f64>,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricComparison {
    pub human: f64,
    pub llm: f64,
    /// `human - llm`.
    pub delta: f64,
    pub p_value: Option<f64>,
    /// Queries contributing to the means.
    pub n: usize,
}

/// Macro-averaged source-preference metrics for one scorer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourcePreferenceReport {
    pub scorer: String,
    pub k: usize,
    pub per_query: Vec<QueryPreference>,
    pub sr: MetricComparison,
    pub ndsr: MetricComparison,
    /// Human and LLM means each skip queries where that source is absent;
    /// `delta` and the test use queries where both are defined.
    pub masr: MetricComparison,
    pub n_masr_human: usize,
    pub n_masr_llm: usize,
    /// Queries with an empty ranking, left out entirely.
    pub n_empty: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn compare(h: &[f64], l: &[f64], test: TestConfig, purpose: &str) -> MetricComparison {
    let (mh, ml) = (mean(h), mean(l));
    MetricComparison {
        human: mh,
        llm: ml,
        delta: mh - ml,
        p_value: paired_significance(h, l, test.resamples, rng::derive_seed(test.seed, purpose)).ok(),
        n: h.len(),
    }
}

pub fn source_preference(
    lists: &[RankedList],
    scorer: &str,
    k: usize,
    test: TestConfig,
) -> Result<SourcePreferenceReport> {
    let (h, l) = (Source::Human, Source::Llm);
    let mut per_query = Vec::with_capacity(lists.len());
    let mut n_empty = 0;
    for list in lists {
        let src = list.sources();
        if src.is_empty() {
            n_empty += 1;
            continue;
        }
        let (srh, ndh) = (sr_at_k(&src, &h, k)?, ndsr_at_k(&src, &h, k)?);
        per_query.push(QueryPreference {
            query_id: list.query_id.clone(),
            sr_human: srh.value,
            sr_llm: sr_at_k(&src, &l, k)?.value,
            ndsr_human: ndh.value,
            ndsr_llm: ndsr_at_k(&src, &l, k)?.value,
            masr_human: masr(&src, &h),
            masr_llm: masr(&src, &l),
            truncated: srh.truncated,
        });
    }
    let col = |f: fn(&QueryPreference) -> f64| per_query.iter().map(f).collect::<Vec<_>>();
    let sr = compare(&col(|q| q.sr_human), &col(|q| q.sr_llm), test, "sr");
    let ndsr = compare(&col(|q| q.ndsr_human), &col(|q| q.ndsr_llm), test, "ndsr");

    let mh: Vec<f64> = per_query.iter().filter_map(|q| q.masr_human).collect();
    let ml: Vec<f64> = per_query.iter().filter_map(|q| q.masr_llm).collect();
    let (bh, bl): (Vec<f64>, Vec<f64>) = per_query
        .iter()
        .filter_map(|q| Some((q.masr_human?, q.masr_llm?)))
        .unzip();
    let paired = compare(&bh, &bl, test, "masr");
    let masr = MetricComparison {
        human: mean(&mh),
        llm: mean(&ml),
        delta: mean(&mh) - mean(&ml),
        ..paired
    };
    Ok(SourcePreferenceReport {
        scorer: scorer.to_string(),
        k,
        per_query,
        sr,
        ndsr,
        masr,
        n_masr_human: mh.len(),
        n_masr_llm: ml.len(),
        n_empty,
    })
}

/// Source-filtered relevance metrics for both sources with relative deltas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevanceReport {
    pub scorer: String,
    pub k: usize,
    pub precision: MetricComparison,
    pub ndcg: MetricComparison,
    pub map: MetricComparison,
    pub relative_delta_precision: Option<f64>,
    pub relative_delta_ndcg: Option<f64>,
    pub relative_delta_map: Option<f64>,
    /// Queries without judgments, skipped.
    pub n_skipped: usize,
}

pub fn relevance_report(
    lists: &[RankedList],
    qrels: &Qrels,
    sources: &SourceMap,
    scorer: &str,
    k: usize,
    test: TestConfig,
) -> Result<RelevanceReport> {
    let (h, l) = (Source::Human, Source::Llm);
    let mut rows: Vec<(RelevanceMetrics, RelevanceMetrics)> = Vec::new();
    let mut n_skipped = 0;
    for list in lists {
        match qrels.get(&list.query_id) {
            Some(j) if !j.is_empty() => {
                let mh = relevance_metrics(list, j, RelevanceMode::SourceFiltered { source: &h, sources }, k)?;
                let ml = relevance_metrics(list, j, RelevanceMode::SourceFiltered { source: &l, sources }, k)?;
                rows.push((mh, ml));
            }
            _ => n_skipped += 1,
        }
    }
    let pick = |f: fn(&RelevanceMetrics) -> f64| -> (Vec<f64>, Vec<f64>) {
        rows.iter().map(|(a, b)| (f(a), f(b))).unzip()
    };
    let (ph, pl) = pick(|m| m.precision_at_k);
    let (nh, nl) = pick(|m| m.ndcg_at_k);
    let (ah, al) = pick(|m| m.map);
    let precision = compare(&ph, &pl, test, "precision");
    let ndcg = compare(&nh, &nl, test, "ndcg");
    let map = compare(&ah, &al, test, "map");
    Ok(RelevanceReport {
        scorer: scorer.to_string(),
        k,
        relative_delta_precision: relative_delta(precision.human, precision.llm),
        relative_delta_ndcg: relative_delta(ndcg.human, ndcg.llm),
        relative_delta_map: relative_delta(map.human, map.llm),
        precision,
        ndcg,
        map,
        n_skipped,
    })
}

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub dataset: String,
    pub query_type: String,
    pub scorer: String,
    pub metric: String,
    pub k: usize,
    pub value_human: f64,
    pub value_llm: f64,
    pub delta: f64,
    pub p_value: Option<f64>,
}

pub const METRIC_CSV_HEADER: &str = "dataset,query_type,scorer,metric,k,value_human,value_llm,delta,p_value";

impl SourcePreferenceReport {
    pub fn rows(&self, dataset: &str, query_type: &str) -> Vec<MetricRow> {
        [("sr", &self.sr), ("ndsr", &self.ndsr), ("masr", &self.masr)]
            .into_iter()
            .map(|(name, c)| MetricRow {
                dataset: dataset.into(),
                query_type: query_type.into(),
                scorer: self.scorer.clone(),
                metric: name.into(),
                k: self.k,
                value_human: c.human,
                value_llm: c.llm,
                delta: c.delta,
                p_value: c.p_value,
            })
            .collect()
    }
}

impl RelevanceReport {
    /// Rows carry the relative delta in the `delta` column.
    pub fn rows(&self, dataset: &str, query_type: &str) -> Vec<MetricRow> {
        [
            ("precision", &self.precision, self.relative_delta_precision),
            ("ndcg", &self.ndcg, self.relative_delta_ndcg),
            ("map", &self.map, self.relative_delta_map),
        ]
        .into_iter()
        .map(|(name, c, rel)| MetricRow {
            dataset: dataset.into(),
            query_type: query_type.into(),
            scorer: self.scorer.clone(),
            metric: format!("rel_delta_{name}"),
            k: self.k,
            value_human: c.human,
            value_llm: c.llm,
            delta: rel.unwrap_or(f64::NAN),
            p_value: c.p_value,
        })
        .collect()
    }
}

fn fmt6(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else {
        format!("{x:.6}")
    }
}

pub fn write_metric_csv<W: Write>(mut w: W, rows: &[MetricRow]) -> std::io::Result<()> {
    writeln!(w, "{METRIC_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.query_type,
            r.scorer,
            r.metric,
            r.k,
            fmt6(r.value_human),
            fmt6(r.value_llm),
            fmt6(r.delta),
            r.p_value.map(fmt6).unwrap_or_else(|| "NA".into())
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::RankedEntry;

    fn labels(s: &str) -> Vec<Source> {
        s.chars()
            .map(|c| if c == 'H' { Source::Human } else { Source::Llm })
            .collect()
    }

    const TABLE3: &str = "HHLLHHLHLH";

    #[test]
    fn sr_examples() {
        let t = labels(TABLE3);
        assert_eq!(sr_at_k(&t, &Source::Human, 10).unwrap().value, 0.6);
        assert_eq!(sr_at_k(&t, &Source::Llm, 10).unwrap().value, 0.4);
        assert!((sr_at_k(&t, &Source::Human, 3).unwrap().value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sr_at_k(&labels("HHH"), &Source::Human, 3).unwrap().value, 1.0);
        let short = sr_at_k(&t, &Source::Human, 20).unwrap();
        assert!(short.truncated && short.depth == 10);
        assert!(matches!(sr_at_k(&[], &Source::Human, 3), Err(Error::UndefinedInput(_))));
    }

    #[test]
    fn ndsr_examples() {
        let t = labels(TABLE3);
        let h = ndsr_at_k(&t, &Source::Human, 10).unwrap().value;
        let l = ndsr_at_k(&t, &Source::Llm, 10).unwrap().value;
        assert!((h - 0.655_547_6).abs() < 1e-7);
        assert!((h + l - 1.0).abs() < 1e-15);
        assert_eq!(ndsr_at_k(&labels("LLLL"), &Source::Llm, 4).unwrap().value, 1.0);
    }

    #[test]
    fn masr_examples() {
        let t = labels(TABLE3);
        let h = masr(&t, &Source::Human).unwrap();
        let l = masr(&t, &Source::Llm).unwrap();
        assert!((h - 0.748_611_1).abs() < 1e-7);
        assert!((l - 0.426_587_3).abs() < 1e-7);
        assert!((h - l - 0.322_023_8).abs() < 1e-7);
        assert_eq!(masr(&labels("HHHLL"), &Source::Human), Some(1.0));
        assert_eq!(masr(&labels("HHH"), &Source::Llm), None);
    }

    fn table3_list() -> (RankedList, BTreeMap<String, u32>, SourceMap) {
        // Relevance column: U U R R I R U R I I
        let rel = [None, None, Some(1), Some(1), Some(0), Some(1), None, Some(1), Some(0), Some(0)];
        let src = labels(TABLE3);
        let mut qrels = BTreeMap::new();
        let mut sources = SourceMap::default();
        let entries = src
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let id = format!("d{:02}", i + 1);
                if let Some(g) = rel[i] {
                    qrels.insert(id.clone(), g);
                }
                sources.insert(id.clone(), s.clone());
                RankedEntry {
                    doc_id: id,
                    score: 10.0 - i as f64,
                    source: s.clone(),
                }
            })
            .collect();
        (
            RankedList {
                query_id: "q".into(),
                depth: 10,
                entries,
                unseen_terms: Vec::new(),
            },
            qrels,
            sources,
        )
    }

    #[test]
    fn table3_dcg_contributions() {
        let (list, qrels, _) = table3_list();
        let grades: Vec<u32> = list
            .entries
            .iter()
            .map(|e| qrels.get(&e.doc_id).copied().unwrap_or(0))
            .collect();
        let c = dcg_contributions(&grades);
        assert!((c[2] - 0.5).abs() < 1e-15);
        let (mut h, mut l) = (0.0, 0.0);
        for (e, v) in list.entries.iter().zip(&c) {
            if e.source == Source::Human {
                h += v;
            } else {
                l += v;
            }
        }
        assert!((l - 0.930_676_8).abs() < 1e-6);
        assert!((h - 0.671_672_1).abs() < 1e-6);
    }

    #[test]
    fn relevance_metrics_modes() {
        let (list, qrels, sources) = table3_list();
        let mixed = relevance_metrics(&list, &qrels, RelevanceMode::Mixed, 10).unwrap();
        assert!((mixed.precision_at_k - 0.4).abs() < 1e-15);
        let human = relevance_metrics(
            &list,
            &qrels,
            RelevanceMode::SourceFiltered { source: &Source::Human, sources: &sources },
            10,
        )
        .unwrap();
        // relevant human docs at ranks 6 and 8, ideal at ranks 1 and 2
        let idcg = 1.0 + 1.0 / 3f64.log2();
        assert!((human.ndcg_at_k - (1.0 / 7f64.log2() + 1.0 / 9f64.log2()) / idcg).abs() < 1e-12);
        assert!((human.map - (1.0 / 6.0 + 2.0 / 8.0) / 2.0).abs() < 1e-12);
        assert!((human.precision_at_k - 0.2).abs() < 1e-15);
    }

    #[test]
    fn perfect_single_doc_and_unjudged() {
        let list = RankedList {
            query_id: "q".into(),
            depth: 1,
            entries: vec![RankedEntry { doc_id: "a".into(), score: 1.0, source: Source::Human }],
            unseen_terms: Vec::new(),
        };
        let qrels: BTreeMap<String, u32> = [("a".to_string(), 1)].into();
        let m = relevance_metrics(&list, &qrels, RelevanceMode::Mixed, 1).unwrap();
        assert_eq!((m.precision_at_k, m.ndcg_at_k, m.map), (1.0, 1.0, 1.0));
        let zero: BTreeMap<String, u32> = [("a".to_string(), 0)].into();
        let m = relevance_metrics(&list, &zero, RelevanceMode::Mixed, 1).unwrap();
        assert!(m.unjudged);
        assert_eq!(m.ndcg_at_k, 0.0);
    }

    #[test]
    fn relative_delta_examples() {
        assert_eq!(relative_delta(0.3, 0.3), Some(0.0));
        assert!((relative_delta(0.68, 0.93).unwrap() + 0.310_559).abs() < 1e-6);
        assert_eq!(relative_delta(0.7, 0.0), Some(2.0));
        assert_eq!(relative_delta(0.0, 0.0), None);
    }

    #[test]
    fn significance_examples() {
        let a: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
        assert_eq!(paired_significance(&a, &a, 10_000, 1).unwrap(), 1.0);
        let b: Vec<f64> = a.iter().map(|x| x - 1.0).collect();
        assert_eq!(paired_significance(&a, &b, 10_000, 1).unwrap(), 2.0 / 4096.0);
        assert!(matches!(paired_significance(&a, &b[..3], 100, 1), Err(Error::LengthMismatch { .. })));

        let c: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 / 11.0).collect();
        let d: Vec<f64> = (0..40).map(|i| ((i * 5) % 13) as f64 / 13.0).collect();
        let p1 = paired_significance(&c, &d, 2000, 9).unwrap();
        assert_eq!(p1, paired_significance(&c, &d, 2000, 9).unwrap());
        assert!(p1 > 0.0 && p1 <= 1.0);
    }

    #[test]
    fn preference_report_aggregates() {
        let mk = |id: &str, s: &str| RankedList {
            query_id: id.into(),
            depth: 10,
            entries: labels(s)
                .into_iter()
                .enumerate()
                .map(|(i, source)| RankedEntry { doc_id: format!("{id}-{i}"), score: -(i as f64), source })
                .collect(),
            unseen_terms: Vec::new(),
        };
        let lists = vec![mk("q1", TABLE3), mk("q2", "HHHH"), mk("q3", "")];
        let r = source_preference(&lists, "bm25", 10, TestConfig::default()).unwrap();
        assert_eq!(r.n_empty, 1);
        assert_eq!(r.per_query.len(), 2);
        assert_eq!(r.n_masr_human, 2);
        assert_eq!(r.n_masr_llm, 1);
        assert!((r.sr.human - 0.8).abs() < 1e-15);
        assert!((r.masr.llm - 0.426_587_3).abs() < 1e-7);
        assert!(r.masr.p_value.is_none());
    }
}

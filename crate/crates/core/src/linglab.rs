//! Distributional profiles of a corpus: rank-frequency tables, two-segment
//! Zipf fits, smoothed IDF, type-token ratio and synonym-cluster usage.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::corpus::{term_counts, Corpus};
use crate::error::{Error, Result};
use crate::index::Index;

/// Default transition rank between the core and extended vocabulary.
pub const DEFAULT_RC: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankRow {
    pub term: String,
    pub frequency: u64,
    pub rank: usize,
}

/// Terms by descending frequency, ties in lexicographic order, ranks from 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankFrequencyTable {
    pub rows: Vec<RankRow>,
}

impl RankFrequencyTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.frequency as f64).collect()
    }

    /// `rank<TAB>frequency` per line.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.rows {
            writeln!(w, "{}\t{}", r.rank, r.frequency)?;
        }
        Ok(())
    }
}

pub fn rank_frequency<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<RankFrequencyTable> {
    let counts = term_counts(tokens);
    if counts.is_empty() {
        return Err(Error::EmptyInput("rank-frequency table of zero tokens".into()));
    }
    let mut pairs: Vec<(&str, u64)> = counts.into_iter().collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Ok(RankFrequencyTable {
        rows: pairs
            .into_iter()
            .enumerate()
            .map(|(i, (term, frequency))| RankRow {
                term: term.to_string(),
                frequency,
                rank: i + 1,
            })
            .collect(),
    })
}

/// OLS fit of `log10 f = intercept - alpha * log10 r` over one rank segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZipfSegment {
    pub alpha: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZipfFit {
    pub r_c: usize,
    /// Ranks `1..=r_c`; `None` with fewer than 2 points.
    pub core: Option<ZipfSegment>,
    /// Ranks above `r_c`; `None` with fewer than 2 points.
    pub ext: Option<ZipfSegment>,
    pub n_core: usize,
    pub n_ext: usize,
}

impl ZipfFit {
    pub fn alpha1(&self) -> Option<f64> {
        self.core.map(|s| s.alpha)
    }

    pub fn alpha2(&self) -> Option<f64> {
        self.ext.map(|s| s.alpha)
    }
}

pub fn fit_zipf(table: &RankFrequencyTable, r_c: usize) -> Result<ZipfFit> {
    fit_zipf_curve(&table.frequencies(), r_c)
}

/// Two-segment fit of a frequency curve given in rank order (`freqs[0]` is
/// rank 1). Zero or negative frequencies are skipped.
pub fn fit_zipf_curve(freqs: &[f64], r_c: usize) -> Result<ZipfFit> {
    let mut core = Vec::new();
    let mut ext = Vec::new();
    for (i, &f) in freqs.iter().enumerate() {
        if f > 0.0 {
            let rank = i + 1;
            let p = ((rank as f64).log10(), f.log10());
            if rank <= r_c {
                core.push(p);
            } else {
                ext.push(p);
            }
        }
    }
    let total = core.len() + ext.len();
    if total < 2 {
        return Err(Error::Fit(total));
    }
    Ok(ZipfFit {
        r_c,
        core: ols(&core),
        ext: ols(&ext),
        n_core: core.len(),
        n_ext: ext.len(),
    })
}

fn ols(points: &[(f64, f64)]) -> Option<ZipfSegment> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Some(ZipfSegment {
        alpha: -slope,
        intercept,
        r2,
        n: points.len(),
    })
}

/// `ln(1 + (N - n + 0.5) / (n + 0.5))`.
pub fn idf_smoothed(n_docs: u64, n: u64) -> Result<f64> {
    if n_docs == 0 {
        return Err(Error::Domain("idf needs at least one document".into()));
    }
    if n > n_docs {
        return Err(Error::Domain(format!("document frequency {n} exceeds N = {n_docs}")));
    }
    let (big_n, n) = (n_docs as f64, n as f64);
    Ok((1.0 + (big_n - n + 0.5) / (n + 0.5)).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdfProfile {
    pub reference: String,
    pub r_c: usize,
    pub mean_idf_core: Option<f64>,
    pub mean_idf_ext: Option<f64>,
    /// Target terms absent from the reference collection.
    pub n_unseen: usize,
    pub idf: BTreeMap<String, f64>,
}

/// IDF of every target term under the reference collection's document
/// frequencies, averaged separately over the target's core and extended
/// ranks.
pub fn idf_profile<'a>(
    target: impl IntoIterator<Item = &'a str>,
    reference: &Index,
    reference_name: &str,
    r_c: usize,
) -> Result<IdfProfile> {
    if reference.n_docs() == 0 {
        return Err(Error::EmptyInput("reference collection has no documents".into()));
    }
    let table = rank_frequency(target)?;
    let n_docs = reference.n_docs() as u64;
    let mut idf = BTreeMap::new();
    let (mut core, mut ext) = (Vec::new(), Vec::new());
    let mut n_unseen = 0;
    for row in &table.rows {
        let df = match reference.term_id(&row.term) {
            Some(t) => reference.df(t),
            None => {
                n_unseen += 1;
                0
            }
        };
        let v = idf_smoothed(n_docs, df)?;
        idf.insert(row.term.clone(), v);
        if row.rank <= r_c {
            core.push(v);
        } else {
            ext.push(v);
        }
    }
    Ok(IdfProfile {
        reference: reference_name.to_string(),
        r_c,
        mean_idf_core: mean(&core),
        mean_idf_ext: mean(&ext),
        n_unseen,
        idf,
    })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Unique tokens over total tokens.
pub fn ttr<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::UndefinedInput("type-token ratio of an empty document".into()));
    }
    let unique: HashSet<&str> = tokens.iter().map(AsRef::as_ref).collect();
    Ok(unique.len() as f64 / tokens.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TtrSummary {
    pub mean: f64,
    pub n_docs: usize,
    /// Documents skipped for having no tokens.
    pub n_empty: usize,
}

/// Mean per-document TTR over the non-empty documents of a corpus.
pub fn mean_ttr(corpus: &Corpus) -> Result<TtrSummary> {
    if !corpus.is_tokenized() {
        return Err(Error::State("corpus must be tokenized".into()));
    }
    let values: Vec<f64> = corpus
        .docs()
        .iter()
        .filter_map(|d| ttr(&d.tokens).ok())
        .collect();
    let mean = mean(&values).ok_or_else(|| Error::EmptyInput("no non-empty documents".into()))?;
    Ok(TtrSummary {
        mean,
        n_docs: values.len(),
        n_empty: corpus.len() - values.len(),
    })
}

/// Synonym clusters read from `cluster_id<TAB>term` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymLexicon {
    clusters: BTreeMap<String, BTreeSet<String>>,
}

const SAMPLE_LEXICON: &str = include_str!("../data/synonyms_sample.tsv");

impl SynonymLexicon {
    pub fn new(clusters: BTreeMap<String, BTreeSet<String>>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::EmptyInput("synonym lexicon has no clusters".into()));
        }
        if let Some((id, _)) = clusters.iter().find(|(_, terms)| terms.is_empty()) {
            return Err(Error::EmptyInput(format!("synonym cluster {id:?} is empty")));
        }
        Ok(SynonymLexicon { clusters })
    }

    /// Blank lines and lines starting with `#` are ignored.
    pub fn from_tsv<R: Read>(r: R) -> Result<Self> {
        let mut clusters: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (n, line) in BufReader::new(r).lines().enumerate() {
            let bad = |message: String| Error::Parse { line: n + 1, message };
            let line = line.map_err(|e| bad(e.to_string()))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, term) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected cluster_id<TAB>term".into()))?;
            let (id, term) = (id.trim(), term.trim());
            if id.is_empty() || term.is_empty() {
                return Err(bad("empty cluster id or term".into()));
            }
            clusters.entry(id.to_string()).or_default().insert(term.to_string());
        }
        Self::new(clusters)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(f)
    }

    /// The small bundled lexicon of common English synonym sets.
    pub fn sample() -> Self {
        Self::from_tsv(SAMPLE_LEXICON.as_bytes()).expect("bundled lexicon parses")
    }

    pub fn cluster(&self, id: &str) -> Result<&BTreeSet<String>> {
        self.clusters
            .get(id)
            .ok_or_else(|| Error::UnknownCluster(id.to_string()))
    }

    pub fn clusters(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynonymStats {
    /// Cluster id → number of member terms occurring at least once.
    pub used_sizes: BTreeMap<String, usize>,
    /// Mean used size over every lexicon cluster, unused ones included.
    pub mean_used_size: f64,
    /// Clusters with at least one member in use.
    pub n_active: usize,
}

pub fn synonym_cluster_stats<'a>(
    tokens: impl IntoIterator<Item = &'a str>,
    lexicon: &SynonymLexicon,
) -> SynonymStats {
    let seen: HashSet<&str> = tokens.into_iter().collect();
    let used_sizes: BTreeMap<String, usize> = lexicon
        .clusters
        .iter()
        .map(|(id, terms)| {
            (
                id.clone(),
                terms.iter().filter(|t| seen.contains(t.as_str())).count(),
            )
        })
        .collect();
    let total: usize = used_sizes.values().sum();
    SynonymStats {
        mean_used_size: total as f64 / used_sizes.len() as f64,
        n_active: used_sizes.values().filter(|&&n| n > 0).count(),
        used_sizes,
    }
}

/// Corpus frequency of each member of one cluster (members with count 0
/// included).
pub fn cluster_distribution<'a>(
    tokens: impl IntoIterator<Item = &'a str>,
    lexicon: &SynonymLexicon,
    cluster_id: &str,
) -> Result<BTreeMap<String, u64>> {
    let members = lexicon.cluster(cluster_id)?;
    let mut out: BTreeMap<String, u64> = members.iter().map(|t| (t.clone(), 0)).collect();
    for t in tokens {
        if let Some(n) = out.get_mut(t) {
            *n += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyShift {
    pub term: String,
    pub rel_freq_a: f64,
    pub rel_freq_b: f64,
    /// `rel_freq_b - rel_freq_a`.
    pub delta: f64,
}

/// Terms with the largest change in relative frequency from `a` to `b`,
/// by descending `|delta|` then term.
pub fn frequency_shift<'a>(
    a: impl IntoIterator<Item = &'a str>,
    b: impl IntoIterator<Item = &'a str>,
    limit: usize,
) -> Result<Vec<FrequencyShift>> {
    let ca = term_counts(a);
    let cb = term_counts(b);
    let ta: u64 = ca.values().sum();
    let tb: u64 = cb.values().sum();
    if ta == 0 || tb == 0 {
        return Err(Error::EmptyInput("frequency shift needs tokens on both sides".into()));
    }
    let terms: BTreeSet<&str> = ca.keys().chain(cb.keys()).copied().collect();
    let mut out: Vec<FrequencyShift> = terms
        .into_iter()
        .map(|t| {
            let fa = ca.get(t).copied().unwrap_or(0) as f64 / ta as f64;
            let fb = cb.get(t).copied().unwrap_or(0) as f64 / tb as f64;
            FrequencyShift {
                term: t.to_string(),
                rel_freq_a: fa,
                rel_freq_b: fb,
                delta: fb - fa,
            }
        })
        .collect();
    out.sort_by(|x, y| {
        y.delta
            .abs()
            .total_cmp(&x.delta.abs())
            .then_with(|| x.term.cmp(&y.term))
    });
    out.truncate(limit);
    Ok(out)
}

//! Query/document term-distribution alignment: term distributions, KL
//! divergence, the query-likelihood expected-score bound, Monte-Carlo
//! expected scores, water-filling optima of the BM25/DFR surrogates,
//! the term-frequency deviation diagnostic and Pearson correlation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{Corpus, Document, PipelineConfig, Source};
use crate::error::{Error, Result};
use crate::index::{build_index, Index};
use crate::rng;
use crate::scoring::{Model, QueryTerms, Scorer, ScorerConfig};

/// Additive smoothing used for KL comparisons between query and corpus
/// distributions.
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "epsilon")]
pub enum Smoothing {
    None,
    /// `p' = (p + ε) / (1 + ε |V|)` over the support vocabulary.
    Additive(f64),
}

/// A probability vector over a sorted vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermDistribution {
    terms: Vec<String>,
    probs: Vec<f64>,
    pub smoothing: Smoothing,
    pub origin: String,
}

impl TermDistribution {
    /// Build from a term → weight map; weights are normalized.
    pub fn from_weights(weights: BTreeMap<String, f64>, origin: impl Into<String>) -> Result<Self> {
        let total: f64 = weights.values().sum();
        if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("weights must be finite and non-negative".into()));
        }
        if total <= 0.0 {
            return Err(Error::EmptyInput("distribution with zero total weight".into()));
        }
        let (terms, probs) = weights.into_iter().map(|(t, w)| (t, w / total)).unzip();
        Ok(TermDistribution {
            terms,
            probs,
            smoothing: Smoothing::None,
            origin: origin.into(),
        })
    }

    /// Vocabulary and probabilities in parallel, vocabulary sorted and
    /// unique. Probabilities are renormalized.
    pub fn from_parts(terms: Vec<String>, probs: Vec<f64>, origin: impl Into<String>) -> Result<Self> {
        if terms.len() != probs.len() {
            return Err(Error::LengthMismatch {
                left: terms.len(),
                right: probs.len(),
            });
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("vocabulary must be sorted and unique".into()));
        }
        Self::from_weights(terms.into_iter().zip(probs).collect(), origin)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: &str) -> f64 {
        self.terms
            .binary_search_by(|t| t.as_str().cmp(term))
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
    }

    pub fn same_support(&self, other: &TermDistribution) -> bool {
        self.terms == other.terms
    }

    /// Apply additive smoothing over the current support.
    pub fn smoothed(mut self, epsilon: f64) -> Self {
        let z = 1.0 + epsilon * self.probs.len() as f64;
        for p in &mut self.probs {
            *p = (*p + epsilon) / z;
        }
        self.smoothing = Smoothing::Additive(epsilon);
        self
    }
}

/// Sorted union of the terms in several token streams.
pub fn union_vocab<'a>(streams: impl IntoIterator<Item = impl IntoIterator<Item = &'a str>>) -> Vec<String> {
    let set: BTreeSet<&str> = streams.into_iter().flatten().collect();
    set.into_iter().map(str::to_string).collect()
}

/// Token-count estimate over `vocab`, optionally smoothed. Every observed
/// token must belong to `vocab`.
pub fn term_distribution<'a>(
    tokens: impl IntoIterator<Item = &'a str>,
    vocab: &[String],
    smoothing: Smoothing,
    origin: &str,
) -> Result<TermDistribution> {
    let mut counts = vec![0u64; vocab.len()];
    let mut total = 0u64;
    for t in tokens {
        let i = vocab
            .binary_search_by(|v| v.as_str().cmp(t))
            .map_err(|_| Error::Domain(format!("token {t:?} is outside the vocabulary")))?;
        counts[i] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyInput(format!("no tokens for distribution {origin:?}")));
    }
    let d = TermDistribution {
        terms: vocab.to_vec(),
        probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        smoothing: Smoothing::None,
        origin: origin.to_string(),
    };
    Ok(match smoothing {
        Smoothing::None => d,
        Smoothing::Additive(eps) => d.smoothed(eps),
    })
}

/// `Σ p ln(p/q)` in nats; `+inf` when `q = 0` somewhere `p > 0`.
pub fn kl_divergence(p: &TermDistribution, q: &TermDistribution) -> Result<f64> {
    if !p.same_support(q) {
        return Err(Error::SupportMismatch);
    }
    let mut kl = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// `-KL(P_Q || P_D) - H(P_Q) = Σ P_Q ln P_D`, the upper bound on the
/// per-query-token expected query-likelihood score.
pub fn ql_expected_bound(pq: &TermDistribution, pd: &TermDistribution) -> Result<f64> {
    Ok(-kl_divergence(pq, pd)? - pq.entropy())
}

/// A length distribution for sampled queries or documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "law", content = "value")]
pub enum LengthLaw {
    Fixed(usize),
    /// Poisson with the given mean, floored at 1.
    Poisson(f64),
}

impl LengthLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthLaw::Fixed(0) => Err(Error::InvalidConfig("fixed length must be positive".into())),
            LengthLaw::Poisson(m) if !(m.is_finite() && m > 0.0) => {
                Err(Error::InvalidConfig(format!("Poisson mean must be positive, got {m}")))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            LengthLaw::Fixed(n) => n as f64,
            LengthLaw::Poisson(m) => m,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            LengthLaw::Fixed(n) => n,
            LengthLaw::Poisson(m) => {
                let draw: f64 = Poisson::new(m).expect("validated mean").sample(rng);
                (draw as usize).max(1)
            }
        }
    }
}

/// Inverse-CDF sampler over a distribution's vocabulary.
#[derive(Debug, Clone)]
pub struct TermSampler {
    index: WeightedIndex<f64>,
}

impl TermSampler {
    pub fn new(d: &TermDistribution) -> Result<Self> {
        Ok(TermSampler {
            index: WeightedIndex::new(d.probs.iter().copied())
                .map_err(|e| Error::Domain(format!("cannot sample from {:?}: {e}", d.origin)))?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

#[derive(Debug, Clone)]
pub struct QueryModel {
    pub dist: TermDistribution,
    pub length: LengthLaw,
}

/// Per-document term models over one shared vocabulary.
#[derive(Debug, Clone)]
pub struct DocModel {
    pub docs: Vec<TermDistribution>,
    pub length: LengthLaw,
}

impl DocModel {
    /// Mean of the per-document models.
    pub fn collection_model(&self) -> Result<TermDistribution> {
        let first = self
            .docs
            .first()
            .ok_or_else(|| Error::EmptyInput("document model has no documents".into()))?;
        let mut acc = vec![0.0; first.len()];
        for d in &self.docs {
            if !d.same_support(first) {
                return Err(Error::SupportMismatch);
            }
            for (a, p) in acc.iter_mut().zip(&d.probs) {
                *a += p;
            }
        }
        let n = self.docs.len() as f64;
        Ok(TermDistribution {
            terms: first.terms.clone(),
            probs: acc.into_iter().map(|a| a / n).collect(),
            smoothing: Smoothing::None,
            origin: "collection".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

const MC_BLOCK: usize = 1024;

/// Monte-Carlo estimate of `E_{q,d}[Score(q, d)]`.
///
/// Query likelihood is evaluated on the models themselves:
/// `P(w|d) = (1-λ) θ_d(w) + λ P_D(w)` with `P_D` the mean document model.
/// The other scorers need an index, so one document is sampled from each
/// document model (lengths from the document length law) and pairs are
/// drawn from that collection. Sample `i` belongs to block `i / 1024`, and
/// each block owns one random stream, so the estimate depends only on the
/// seed.
pub fn mc_expected_score(
    query: &QueryModel,
    docs: &DocModel,
    scorer: &ScorerConfig,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Domain("samples must be at least 1".into()));
    }
    scorer.validate()?;
    query.length.validate()?;
    docs.length.validate()?;
    let collection = docs.collection_model()?;
    if !query.dist.same_support(&collection) {
        return Err(Error::SupportMismatch);
    }
    let q_sampler = TermSampler::new(&query.dist)?;
    let n_docs = docs.docs.len();
    let blocks = samples.div_ceil(MC_BLOCK);

    let per_block: Vec<(f64, f64)> = if scorer.model == Model::QlJm {
        let lambda = scorer.lambda;
        let log_p: Vec<Vec<f64>> = docs
            .docs
            .iter()
            .map(|d| {
                d.probs
                    .iter()
                    .zip(&collection.probs)
                    .map(|(t, c)| ((1.0 - lambda) * t + lambda * c).ln())
                    .collect()
            })
            .collect();
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut r = rng::stream(seed, b as u64 + 1);
                let n = MC_BLOCK.min(samples - b * MC_BLOCK);
                let (mut s, mut s2) = (0.0, 0.0);
                for _ in 0..n {
                    let d = r.random_range(0..n_docs);
                    let len = query.length.sample(&mut r);
                    let x: f64 = (0..len).map(|_| log_p[d][q_sampler.sample(&mut r)]).sum();
                    s += x;
                    s2 += x * x;
                }
                (s, s2)
            })
            .collect()
    } else {
        let index = sample_collection(docs, seed)?;
        let scorer = Scorer::new(&index, *scorer)?;
        let vocab = query.dist.terms();
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut r = rng::stream(seed, b as u64 + 1);
                let n = MC_BLOCK.min(samples - b * MC_BLOCK);
                let (mut s, mut s2) = (0.0, 0.0);
                for _ in 0..n {
                    let d = r.random_range(0..n_docs) as u32;
                    let len = query.length.sample(&mut r);
                    let tokens: Vec<&str> = (0..len).map(|_| vocab[q_sampler.sample(&mut r)].as_str()).collect();
                    let x = scorer.score(&QueryTerms::resolve(&index, &tokens), d);
                    s += x;
                    s2 += x * x;
                }
                (s, s2)
            })
            .collect()
    };
    let (s, s2) = per_block.iter().fold((0.0, 0.0), |acc, b| (acc.0 + b.0, acc.1 + b.1));
    let n = samples as f64;
    let mean = s / n;
    let var = if samples > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_err: (var / n).sqrt(),
        samples,
    })
}

/// One document per model, ids zero-padded so index order equals model order.
fn sample_collection(docs: &DocModel, seed: u64) -> Result<Index> {
    let width = docs.docs.len().to_string().len();
    let base = rng::derive_seed(seed, "mc-collection");
    let documents: Vec<Document> = docs
        .docs
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let sampler = TermSampler::new(m)?;
            let mut r = rng::stream(base, i as u64);
            let len = docs.length.sample(&mut r);
            let tokens: Vec<String> = (0..len).map(|_| m.terms[sampler.sample(&mut r)].clone()).collect();
            let mut d = Document::new(format!("d{i:0width$}"), tokens.join(" "), Source::Other("synthetic".into()));
            d.tokens = tokens;
            Ok(d)
        })
        .collect::<Result<_>>()?;
    build_index(&Corpus::pretokenized(documents, PipelineConfig::default())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetModel {
    Bm25,
    Dfr,
}

impl OffsetModel {
    fn delta(self, k1: f64) -> f64 {
        match self {
            OffsetModel::Bm25 => k1,
            OffsetModel::Dfr => 1.0,
        }
    }
}

/// Concave surrogate `F(P)` whose maximizer is [`waterfill_optimum`]:
/// BM25 `Σ P_Q idf (k1+1) L p / (k1 + L p)`, DFR `Σ P_Q idf L p / (L p + 1)`.
pub fn waterfill_objective(
    pq: &[f64],
    idf: &[f64],
    k1: f64,
    l_d: f64,
    model: OffsetModel,
    p: &[f64],
) -> f64 {
    pq.iter()
        .zip(idf)
        .zip(p)
        .map(|((&q, &w), &x)| {
            let t = l_d * x;
            match model {
                OffsetModel::Bm25 => q * w * (k1 + 1.0) * t / (k1 + t),
                OffsetModel::Dfr => q * w * t / (t + 1.0),
            }
        })
        .sum()
}

/// `P*(w) = max(0, α sqrt(P_Q(w) idf(w)) - δ / L_d)` with `δ = k1` for BM25
/// and 1 for DFR, `α` set so the result sums to 1. Bisection on `α` finds
/// the active set, then `α = (1 + |A| δ/L_d) / Σ_A sqrt(P_Q idf)`.
/// `idf` is aligned with `pq.terms()`.
pub fn waterfill_optimum(
    pq: &TermDistribution,
    idf: &[f64],
    k1: f64,
    l_d: f64,
    model: OffsetModel,
) -> Result<TermDistribution> {
    if idf.len() != pq.len() {
        return Err(Error::LengthMismatch {
            left: pq.len(),
            right: idf.len(),
        });
    }
    if let Some(i) = idf.iter().position(|&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::Domain(format!("idf of {:?} must be positive, got {}", pq.terms[i], idf[i])));
    }
    if !(k1.is_finite() && k1 > 0.0) {
        return Err(Error::Domain(format!("k1 must be positive, got {k1}")));
    }
    if !(l_d.is_finite() && l_d > 0.0) {
        return Err(Error::Domain(format!("L_d must be positive, got {l_d}")));
    }
    let probs = waterfill(pq.probs(), idf, model.delta(k1) / l_d)?;
    Ok(TermDistribution {
        terms: pq.terms.clone(),
        probs,
        smoothing: Smoothing::None,
        origin: format!("waterfill_{}", match model {
            OffsetModel::Bm25 => "bm25",
            OffsetModel::Dfr => "dfr",
        }),
    })
}

fn waterfill(pq: &[f64], idf: &[f64], offset: f64) -> Result<Vec<f64>> {
    let s: Vec<f64> = pq.iter().zip(idf).map(|(q, w)| (q * w).sqrt()).collect();
    let s_min = s.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
    if !s_min.is_finite() {
        return Err(Error::Infeasible(
            "mass 1 is unreachable: P_Q(w) idf(w) is zero for every term".into(),
        ));
    }
    let mass = |a: f64| s.iter().map(|&x| (a * x - offset).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, (1.0 + offset * s.len() as f64) / s_min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    // exact solve on the active set, repeated until the set is stable
    let mut alpha = hi;
    for _ in 0..s.len() + 1 {
        let active: Vec<f64> = s.iter().copied().filter(|&x| alpha * x > offset).collect();
        let next = (1.0 + active.len() as f64 * offset) / active.iter().sum::<f64>();
        if next == alpha {
            break;
        }
        alpha = next;
    }
    let mut p: Vec<f64> = s.iter().map(|&x| (alpha * x - offset).max(0.0)).collect();
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Infeasible(format!("normalization failed, mass {total}")));
    }
    for x in &mut p {
        *x /= total;
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TfDeviation {
    /// Largest per-term variance.
    pub sigma_sq_max: f64,
    pub argmax: Option<String>,
    /// Term → `E_d[(tf(w,d)/|d| - P_D(w))^2]`.
    pub per_term: BTreeMap<String, f64>,
    /// Documents averaged over (empty documents are skipped).
    pub n_docs: usize,
}

/// Per-term variance of normalized term frequency around the collection
/// model `P_D(w) = cf(w) / T`, averaged over non-empty documents.
pub fn tf_deviation_diagnostic(index: &Index) -> Result<TfDeviation> {
    let nonempty: Vec<u32> = index.doc_ids().filter(|&d| index.doc_len(d) > 0).collect();
    if nonempty.len() < 2 {
        return Err(Error::UndefinedInput(format!(
            "deviation diagnostic needs at least 2 non-empty documents, got {}",
            nonempty.len()
        )));
    }
    let n = nonempty.len() as f64;
    let total = index.total_tokens() as f64;
    let per_term: BTreeMap<String, f64> = (0..index.vocab_size() as u32)
        .into_par_iter()
        .map(|t| {
            let p = index.cf(t) as f64 / total;
            let mut acc = 0.0;
            let mut hit = 0usize;
            for post in index.postings(t) {
                let x = f64::from(post.tf) / f64::from(index.doc_len(post.doc)) - p;
                acc += x * x;
                hit += 1;
            }
            acc += (nonempty.len() - hit) as f64 * p * p;
            (index.term(t).to_string(), acc / n)
        })
        .collect();
    let (argmax, sigma_sq_max) = per_term
        .iter()
        .fold((None, 0.0), |(arg, best), (t, &v)| if v > best { (Some(t.clone()), v) } else { (arg, best) });
    Ok(TfDeviation {
        sigma_sq_max,
        argmax,
        per_term,
        n_docs: nonempty.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pearson {
    pub r: f64,
    /// Two-sided, from Student's t with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Pearson> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::UndefinedInput(format!("correlation needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedInput("correlation of a constant series".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * ((nf - 2.0) / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("df > 0");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(Pearson { r, p_value, n })
}

/// KL of the query distribution to the human and LLM corpora.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub dataset: String,
    pub query_type: String,
    pub kl_q_human: f64,
    pub kl_q_llm: f64,
    /// `kl_q_llm - kl_q_human`; positive predicts a human preference.
    pub delta_kl: f64,
    /// Scorer name → ΔMASR (human − llm).
    pub delta_masr: BTreeMap<String, f64>,
}

/// KL divergences over the union vocabulary with additive smoothing.
pub fn alignment_kl<'a>(
    queries: &[&'a str],
    human: &[&'a str],
    llm: &[&'a str],
    epsilon: f64,
) -> Result<(f64, f64)> {
    let vocab = union_vocab([queries, human, llm].map(|s| s.iter().copied()));
    let sm = Smoothing::Additive(epsilon);
    let pq = term_distribution(queries.iter().copied(), &vocab, sm, "queries")?;
    let ph = term_distribution(human.iter().copied(), &vocab, sm, "human")?;
    let pl = term_distribution(llm.iter().copied(), &vocab, sm, "llm")?;
    Ok((kl_divergence(&pq, &ph)?, kl_divergence(&pq, &pl)?))
}

pub const ALIGNMENT_CSV_HEADER: &str = "dataset,query_type,kl_q_human,kl_q_llm,delta_kl,scorer,delta_masr";

/// One row per scorer.
pub fn write_alignment_csv<W: Write>(mut w: W, reports: &[AlignmentReport]) -> std::io::Result<()> {
    writeln!(w, "{ALIGNMENT_CSV_HEADER}")?;
    for r in reports {
        for (scorer, dm) in &r.delta_masr {
            writeln!(
                w,
                "{},{},{:.6},{:.6},{:.6},{},{:.6}",
                r.dataset, r.query_type, r.kl_q_human, r.kl_q_llm, r.delta_kl, scorer, dm
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub scorer: String,
    pub pearson: Pearson,
}

/// Pearson r of ΔKL against ΔMASR for each scorer present in every report.
pub fn correlate(reports: &[AlignmentReport]) -> Result<Vec<Correlation>> {
    let first = reports
        .first()
        .ok_or_else(|| Error::EmptyInput("no alignment reports".into()))?;
    first
        .delta_masr
        .keys()
        .filter(|s| reports.iter().all(|r| r.delta_masr.contains_key(*s)))
        .map(|s| {
            let xs: Vec<f64> = reports.iter().map(|r| r.delta_kl).collect();
            let ys: Vec<f64> = reports.iter().map(|r| r.delta_masr[s]).collect();
            Ok(Correlation {
                scorer: s.clone(),
                pearson: pearson(&xs, &ys)?,
            })
        })
        .collect()
}

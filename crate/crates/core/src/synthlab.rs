//! Synthetic corpora and query sets with controlled double power-law
//! exponents and controlled KL distance to a query distribution.
//!
//! Term `t{r}` (zero-padded) is the rank-`r` term of the generating law, so
//! the sorted vocabulary is also the rank order. Documents and queries each
//! own one ChaCha8 stream (see [`crate::rng`]); outputs depend only on the
//! seed.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{
    alignment_kl, correlate, kl_divergence, AlignmentReport, Correlation, LengthLaw, TermDistribution, TermSampler,
};
use crate::corpus::{Corpus, Document, PipelineConfig, Query, QuerySet, Source};
use crate::error::{Error, Result};
use crate::index::build_index;
use crate::prefmetrics::{source_preference, TestConfig};
use crate::rng;
use crate::scoring::{search_all, Model, ScorerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub vocab_size: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub r_c: usize,
    pub n_docs: usize,
    /// Poisson mean of document length (floored at 1).
    pub doc_length: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.vocab_size == 0 || self.n_docs == 0 {
            return bad("vocab_size and n_docs must be positive".into());
        }
        if !(self.alpha1 > 0.0 && self.alpha2 > 0.0 && self.alpha1.is_finite() && self.alpha2.is_finite()) {
            return bad(format!("exponents must be positive, got {} and {}", self.alpha1, self.alpha2));
        }
        if self.r_c == 0 || (self.vocab_size > 1 && self.r_c >= self.vocab_size) {
            return bad(format!("r_c must lie in [1, vocab_size), got {}", self.r_c));
        }
        LengthLaw::Poisson(self.doc_length).validate()
    }

    /// The normalized double power law over `t1..t{vocab_size}`.
    pub fn distribution(&self) -> Result<TermDistribution> {
        self.validate()?;
        let rc = self.r_c as f64;
        let weights: Vec<f64> = (1..=self.vocab_size)
            .map(|r| {
                let r = r as f64;
                if r <= rc {
                    r.powf(-self.alpha1)
                } else {
                    rc.powf(self.alpha2 - self.alpha1) * r.powf(-self.alpha2)
                }
            })
            .collect();
        TermDistribution::from_parts(term_names(self.vocab_size), weights, "double_power_law")
    }
}

/// `t000001`, `t000002`, ... with at least six digits.
pub fn term_names(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(6);
    (1..=n).map(|r| format!("t{r:0width$}")).collect()
}

fn id_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

/// Documents of i.i.d. draws from `dist`, ids `{prefix}{i}`.
pub fn gen_corpus_from(
    dist: &TermDistribution,
    n_docs: usize,
    length: LengthLaw,
    seed: u64,
    source: Source,
    prefix: &str,
) -> Result<Corpus> {
    length.validate()?;
    let sampler = TermSampler::new(dist)?;
    let base = rng::derive_seed(seed, "documents");
    let width = id_width(n_docs);
    let terms = dist.terms();
    let docs: Vec<Document> = (0..n_docs)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(base, i as u64);
            let len = length.sample(&mut r);
            let tokens: Vec<String> = (0..len).map(|_| terms[sampler.sample(&mut r)].clone()).collect();
            let mut d = Document::new(format!("{prefix}{i:0width$}"), tokens.join(" "), source.clone());
            d.tokens = tokens;
            d
        })
        .collect();
    Corpus::pretokenized(docs, PipelineConfig::default())
}

pub fn gen_corpus(spec: &GeneratorSpec, source: Source) -> Result<Corpus> {
    let prefix = format!("{}-", source.as_str());
    gen_corpus_from(
        &spec.distribution()?,
        spec.n_docs,
        LengthLaw::Poisson(spec.doc_length),
        spec.seed,
        source,
        &prefix,
    )
}

/// Queries of i.i.d. draws from `pq`, ids `q{i}`.
pub fn gen_queries(pq: &TermDistribution, n: usize, length: LengthLaw, seed: u64, source: Source) -> Result<QuerySet> {
    length.validate()?;
    let sampler = TermSampler::new(pq)?;
    let base = rng::derive_seed(seed, "queries");
    let width = id_width(n);
    let terms = pq.terms();
    let queries: Vec<Query> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(base, i as u64);
            let len = length.sample(&mut r);
            let tokens: Vec<String> = (0..len).map(|_| terms[sampler.sample(&mut r)].clone()).collect();
            let mut q = Query::new(format!("q{i:0width$}"), tokens.join(" "), source.clone());
            q.tokens = tokens;
            q
        })
        .collect();
    QuerySet::pretokenized(queries, PipelineConfig::default())
}

/// Distributions `P_1..P_rungs` with `KL(P_Q || P_i)` at evenly spaced
/// targets from 0 to `max_kl`.
///
/// A fixed perturbation `R ∝ P_Q exp(g)`, `g ~ N(0, 1)` per term, is drawn
/// once; rung `i` is the geometric interpolation `P_t ∝ P_Q^(1-t) R^t` with
/// `t ≥ 0` chosen by bisection (KL is increasing in `t`). Rung 1 is `P_Q`.
pub fn kl_ladder(pq: &TermDistribution, rungs: usize, max_kl: f64, seed: u64) -> Result<Vec<TermDistribution>> {
    if rungs < 2 {
        return Err(Error::InvalidConfig(format!("a ladder needs at least 2 rungs, got {rungs}")));
    }
    if !(max_kl.is_finite() && max_kl > 0.0) {
        return Err(Error::InvalidConfig(format!("max_kl must be positive, got {max_kl}")));
    }
    let mut r = rng::stream(rng::derive_seed(seed, "kl-ladder"), 0);
    let g: Vec<f64> = (0..pq.len()).map(|_| r.sample(StandardNormal)).collect();
    let at = |t: f64| -> Result<TermDistribution> {
        let logs: Vec<f64> = pq
            .probs()
            .iter()
            .zip(&g)
            .map(|(&p, &x)| if p > 0.0 { p.ln() + t * x } else { f64::NEG_INFINITY })
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
        TermDistribution::from_parts(pq.terms().to_vec(), w, "kl_ladder")
    };
    let kl_at = |t: f64| -> Result<f64> { kl_divergence(pq, &at(t)?) };

    let mut hi = 1.0;
    let mut doublings = 0;
    while kl_at(hi)? < max_kl {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Infeasible(format!(
                "KL {max_kl} is unreachable from this query distribution (limit {})",
                kl_at(hi)?
            )));
        }
    }
    let mut out = Vec::with_capacity(rungs);
    let mut first = pq.clone();
    first.origin = "kl_ladder".into();
    out.push(first);
    for i in 1..rungs {
        let target = max_kl * i as f64 / (rungs - 1) as f64;
        let (mut lo, mut up) = (0.0, hi);
        for _ in 0..100 {
            let mid = 0.5 * (lo + up);
            if kl_at(mid)? < target {
                lo = mid;
            } else {
                up = mid;
            }
        }
        out.push(at(0.5 * (lo + up))?);
    }
    Ok(out)
}

/// Mixed-corpus preference experiment: queries from `P_Q`, a human corpus
/// from one fixed ladder rung and, for every rung, an LLM corpus from that
/// rung. Each mixture gives one [`AlignmentReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderExperiment {
    pub vocab_size: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub r_c: usize,
    pub rungs: usize,
    pub max_kl: f64,
    /// Ladder rung (0-based) the human corpus is drawn from.
    pub human_rung: usize,
    pub n_docs: usize,
    pub doc_length: f64,
    pub n_queries: usize,
    pub query_length: f64,
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for LadderExperiment {
    fn default() -> Self {
        LadderExperiment {
            vocab_size: 1000,
            alpha1: 0.8,
            alpha2: 1.6,
            r_c: 200,
            rungs: 9,
            max_kl: 1.0,
            human_rung: 4,
            n_docs: 400,
            doc_length: 20.0,
            n_queries: 200,
            query_length: 4.0,
            k: 100,
            epsilon: crate::alignment::DEFAULT_EPSILON,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderOutcome {
    pub reports: Vec<AlignmentReport>,
    pub correlations: Vec<Correlation>,
}

/// Generated inputs of one ladder mixture: queries from `P_Q`, the human
/// corpus (ids `h…`) and the LLM corpus of the chosen rung (ids `l…`).
#[derive(Debug, Clone)]
pub struct LadderMixture {
    pub queries: QuerySet,
    pub human: Corpus,
    pub llm: Corpus,
}

struct Ladder {
    rungs: Vec<TermDistribution>,
    queries: QuerySet,
    human: Corpus,
}

impl Ladder {
    fn build(cfg: &LadderExperiment) -> Result<Ladder> {
        if cfg.human_rung >= cfg.rungs {
            return Err(Error::InvalidConfig(format!(
                "human_rung {} outside a ladder of {} rungs",
                cfg.human_rung, cfg.rungs
            )));
        }
        let spec = GeneratorSpec {
            vocab_size: cfg.vocab_size,
            alpha1: cfg.alpha1,
            alpha2: cfg.alpha2,
            r_c: cfg.r_c,
            n_docs: cfg.n_docs,
            doc_length: cfg.doc_length,
            seed: cfg.seed,
        };
        let pq = spec.distribution()?;
        let rungs = kl_ladder(&pq, cfg.rungs, cfg.max_kl, cfg.seed)?;
        let queries = gen_queries(&pq, cfg.n_queries, LengthLaw::Poisson(cfg.query_length), cfg.seed, Source::Human)?;
        let human = gen_corpus_from(
            &rungs[cfg.human_rung],
            cfg.n_docs,
            LengthLaw::Poisson(cfg.doc_length),
            rng::derive_seed(cfg.seed, "human"),
            Source::Human,
            "h",
        )?;
        Ok(Ladder { rungs, queries, human })
    }

    fn llm(&self, cfg: &LadderExperiment, i: usize) -> Result<Corpus> {
        let rung = self.rungs.get(i).ok_or_else(|| {
            Error::InvalidConfig(format!("rung {i} outside a ladder of {} rungs", self.rungs.len()))
        })?;
        gen_corpus_from(
            rung,
            cfg.n_docs,
            LengthLaw::Poisson(cfg.doc_length),
            rng::derive_seed(cfg.seed, &format!("llm-{i}")),
            Source::Llm,
            "l",
        )
    }
}

/// The mixture [`run_ladder_experiment`] builds for `llm_rung`.
pub fn ladder_mixture(cfg: &LadderExperiment, llm_rung: usize) -> Result<LadderMixture> {
    let ladder = Ladder::build(cfg)?;
    let llm = ladder.llm(cfg, llm_rung)?;
    Ok(LadderMixture {
        queries: ladder.queries,
        human: ladder.human,
        llm,
    })
}

pub fn run_ladder_experiment(cfg: &LadderExperiment, scorers: &[ScorerConfig]) -> Result<LadderOutcome> {
    let ladder = Ladder::build(cfg)?;
    let q_tokens: Vec<&str> = ladder.queries.tokens().collect();
    let h_tokens: Vec<&str> = ladder.human.tokens().collect();

    let reports = (0..cfg.rungs)
        .map(|i| {
            let llm = ladder.llm(cfg, i)?;
            let l_tokens: Vec<&str> = llm.tokens().collect();
            let (kl_h, kl_l) = alignment_kl(&q_tokens, &h_tokens, &l_tokens, cfg.epsilon)?;
            let mixed = Corpus::merge([ladder.human.clone(), llm])?;
            let index = build_index(&mixed)?;
            let mut delta_masr = BTreeMap::new();
            for sc in scorers {
                let lists = search_all(&ladder.queries, &index, sc, cfg.k)?;
                let rep = source_preference(&lists, sc.model.name(), cfg.k, TestConfig { resamples: 0, seed: 0 })?;
                delta_masr.insert(sc.model.name().to_string(), rep.masr.delta);
            }
            Ok(AlignmentReport {
                dataset: format!("rung{i:02}"),
                query_type: "synthetic".into(),
                kl_q_human: kl_h,
                kl_q_llm: kl_l,
                delta_kl: kl_l - kl_h,
                delta_masr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let correlations = correlate(&reports)?;
    Ok(LadderOutcome { reports, correlations })
}

/// The four scorers with default parameters.
pub fn default_scorers() -> Vec<ScorerConfig> {
    Model::ALL.iter().map(|&m| ScorerConfig::new(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linglab::ttr;

    fn spec(vocab: usize) -> GeneratorSpec {
        GeneratorSpec {
            vocab_size: vocab,
            alpha1: 0.9,
            alpha2: 1.7,
            r_c: 20.min(vocab.saturating_sub(1)).max(1),
            n_docs: 50,
            doc_length: 30.0,
            seed: 5,
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = gen_corpus(&spec(100), Source::Human).unwrap();
        let b = gen_corpus(&spec(100), Source::Human).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_jsonl(&mut x).unwrap();
        b.write_jsonl(&mut y).unwrap();
        assert_eq!(x, y);
        let mut other = spec(100);
        other.seed = 6;
        assert_ne!(gen_corpus(&other, Source::Human).unwrap(), a);
    }

    #[test]
    fn single_term_vocabulary() {
        let c = gen_corpus(&spec(1), Source::Llm).unwrap();
        for d in c.docs() {
            assert!(d.tokens.iter().all(|t| t == "t000001"));
            assert!((ttr(&d.tokens).unwrap() - 1.0 / d.tokens.len() as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn term_names_sort_in_rank_order() {
        let names = term_names(12_345);
        assert!(names.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(names[0], "t000001");
    }

    #[test]
    fn invalid_spec() {
        let mut s = spec(100);
        s.r_c = 100;
        assert!(s.validate().is_err());
        s.r_c = 10;
        s.alpha2 = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn queries_point_mass_and_determinism() {
        let pq = TermDistribution::from_parts(vec!["a".into(), "b".into()], vec![1.0, 0.0], "pq").unwrap();
        let qs = gen_queries(&pq, 20, LengthLaw::Poisson(3.0), 1, Source::Human).unwrap();
        assert!(qs.tokens().all(|t| t == "a"));
        let again = gen_queries(&pq, 20, LengthLaw::Poisson(3.0), 1, Source::Human).unwrap();
        assert_eq!(qs, again);
    }

    #[test]
    fn ladder_hits_targets() {
        let pq = spec(200).distribution().unwrap();
        let ladder = kl_ladder(&pq, 8, 0.8, 3).unwrap();
        assert_eq!(ladder[0].probs(), pq.probs());
        let kls: Vec<f64> = ladder.iter().map(|p| kl_divergence(&pq, p).unwrap()).collect();
        assert!(kls.windows(2).all(|w| w[1] > w[0]));
        for (i, kl) in kls.iter().enumerate().skip(1) {
            let target = 0.8 * i as f64 / 7.0;
            assert!((kl - target).abs() <= 0.05 * target, "{kl} vs {target}");
        }
    }

    #[test]
    fn ladder_unreachable() {
        let pq = TermDistribution::from_parts(vec!["a".into(), "b".into()], vec![1.0, 0.0], "pq").unwrap();
        assert!(matches!(kl_ladder(&pq, 3, 0.5, 1), Err(Error::Infeasible(_))));
        assert!(kl_ladder(&pq, 1, 0.5, 1).is_err());
    }
}

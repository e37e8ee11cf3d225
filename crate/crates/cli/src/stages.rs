use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lexalign::alignment::{alignment_kl, correlate, write_alignment_csv, AlignmentReport, Correlation};
use lexalign::corpus::{ingest_corpus, ingest_queries, Corpus, Qrels, QuerySet, Source};
use lexalign::index::{build_index, Index};
use lexalign::linglab::{
    cluster_distribution, fit_zipf, frequency_shift, idf_profile, mean_ttr, rank_frequency, synonym_cluster_stats,
    SynonymLexicon,
};
use lexalign::prefmetrics::{relevance_report, source_preference, write_metric_csv, MetricRow, TestConfig};
use lexalign::rng;
use lexalign::scoring::trec::read_run;
use lexalign::scoring::{search_all, trec, Model, RankedList, SourceMap};
use lexalign::synthlab::{ladder_mixture, run_ladder_experiment};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{fmt6, fmt6_opt, hash_line, list_files, sha256_file, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProfileKind {
    Zipf,
    Idf,
    Ttr,
    Synonyms,
}

/// A resolved configuration bound to its output directory.
pub struct Ctx {
    pub cfg: RunConfig,
    pub hash: String,
}

type StageResult<T = ()> = Result<T, CliError>;

impl Ctx {
    pub fn new(cfg: RunConfig) -> Self {
        let hash = cfg.hash();
        Ctx { cfg, hash }
    }

    fn out(&self, rel: &str) -> PathBuf {
        self.cfg.output_dir.join(rel)
    }

    fn write(&self, stage: &'static str, rel: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> StageResult {
        let path = self.out(rel);
        write_atomic(&path, fill).map_err(|e| CliError::io(stage, e))?;
        info!("{stage}: wrote {}", path.display());
        Ok(())
    }

    /// CSV/TSV report with the config hash on its first line.
    fn report(&self, stage: &'static str, rel: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> StageResult {
        let hash = self.hash.clone();
        self.write(stage, rel, move |w| {
            hash_line(w, &hash)?;
            fill(w)
        })
    }

    fn require(&self, stage: &'static str, rel: &str, producer: &str) -> StageResult<PathBuf> {
        let p = self.out(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::input(stage, format!("{} is missing; run `{producer}` first", p.display())))
        }
    }

    fn query_types(&self) -> Vec<String> {
        if self.cfg.inputs.queries.is_empty() && self.cfg.synth.is_some() {
            vec![SYNTH_QUERY_TYPE.into()]
        } else {
            self.cfg.inputs.queries.keys().cloned().collect()
        }
    }

    fn load_corpus(&self, stage: &'static str) -> StageResult<Corpus> {
        let p = self.require(stage, CORPUS, "ingest")?;
        Ok(ingest_corpus(&p).map_err(|e| CliError::from_lib(stage, e))?.tokenized(&self.cfg.pipeline))
    }

    fn load_queries(&self, stage: &'static str, qt: &str) -> StageResult<QuerySet> {
        let p = self.require(stage, &queries_rel(qt), "ingest")?;
        Ok(ingest_queries(&p).map_err(|e| CliError::from_lib(stage, e))?.tokenized(&self.cfg.pipeline))
    }

    fn load_index(&self, stage: &'static str) -> StageResult<Index> {
        let p = self.require(stage, INDEX, "index")?;
        let f = fs::File::open(&p).map_err(|e| CliError::input(stage, format!("{}: {e}", p.display())))?;
        Index::read_snapshot(std::io::BufReader::new(f)).map_err(|e| CliError::from_lib(stage, e))
    }

    fn load_runs(&self, stage: &'static str, qt: &str, model: Model) -> StageResult<Vec<RankedList>> {
        let sources = self.require(stage, SOURCES, "retrieve")?;
        let sources = fs::File::open(&sources).map_err(|e| CliError::input(stage, e.to_string()))?;
        let sources = SourceMap::read_jsonl(std::io::BufReader::new(sources)).map_err(|e| CliError::from_lib(stage, e))?;
        let p = self.require(stage, &run_rel(qt, model), "retrieve")?;
        let f = fs::File::open(&p).map_err(|e| CliError::input(stage, e.to_string()))?;
        read_run(std::io::BufReader::new(f), &sources, self.cfg.retrieval.k).map_err(|e| CliError::from_lib(stage, e))
    }
}

const CORPUS: &str = "ingest/corpus.jsonl";
const QRELS: &str = "ingest/qrels.txt";
const INDEX: &str = "index/index.snap";
const INDEX_META: &str = "index/meta.json";
const SOURCES: &str = "runs/sources.jsonl";
const SYNTH_HUMAN: &str = "synth/human.jsonl";
const SYNTH_LLM: &str = "synth/llm.jsonl";
const SYNTH_QUERIES: &str = "synth/queries.jsonl";
const SYNTH_QUERY_TYPE: &str = "synthetic";

fn queries_rel(qt: &str) -> String {
    format!("ingest/queries.{qt}.jsonl")
}

fn run_rel(qt: &str, model: Model) -> String {
    format!("runs/{qt}.{}.run", model.name())
}

fn read_input(stage: &'static str, p: &Path) -> StageResult<Vec<u8>> {
    fs::read(p).map_err(|e| CliError::input(stage, format!("{}: {e}", p.display())))
}

/// Distinct document sources in first-appearance order.
fn sources_of(corpus: &Corpus) -> Vec<Source> {
    let mut seen = BTreeSet::new();
    corpus
        .docs()
        .iter()
        .filter(|d| seen.insert(d.source.as_str().to_string()))
        .map(|d| d.source.clone())
        .collect()
}

pub fn ingest(ctx: &Ctx) -> StageResult {
    const STAGE: &str = "ingest";
    let inputs = &ctx.cfg.inputs;
    let (corpus_paths, query_paths): (Vec<PathBuf>, BTreeMap<String, PathBuf>) = if inputs.corpus.is_empty() {
        if ctx.cfg.synth.is_none() {
            return Err(CliError::Config("inputs.corpus is empty and no [synth] section is configured".into()));
        }
        (
            vec![ctx.out(SYNTH_HUMAN), ctx.out(SYNTH_LLM)],
            BTreeMap::from([(SYNTH_QUERY_TYPE.to_string(), ctx.out(SYNTH_QUERIES))]),
        )
    } else {
        (inputs.corpus.clone(), inputs.queries.clone())
    };

    let mut parts = Vec::new();
    for p in &corpus_paths {
        if !p.is_file() {
            return Err(CliError::input(STAGE, format!("corpus file {} not found", p.display())));
        }
        parts.push(ingest_corpus(p).map_err(|e| CliError::from_lib(STAGE, e))?);
    }
    let corpus = Corpus::merge(parts).map_err(|e| CliError::from_lib(STAGE, e))?;
    ctx.write(STAGE, CORPUS, |w| corpus.write_jsonl(w))?;

    let mut summary = BTreeMap::new();
    for (qt, p) in &query_paths {
        if !p.is_file() {
            return Err(CliError::input(STAGE, format!("query file {} not found", p.display())));
        }
        let qs = ingest_queries(p).map_err(|e| CliError::from_lib(STAGE, e))?;
        ctx.write(STAGE, &queries_rel(qt), |w| qs.write_jsonl(w))?;
        summary.insert(format!("queries.{qt}"), qs.len());
    }
    if let Some(p) = &inputs.qrels {
        let bytes = read_input(STAGE, p)?;
        Qrels::from_trec(bytes.as_slice()).map_err(|e| CliError::from_lib(STAGE, e))?;
        ctx.write(STAGE, QRELS, |w| w.write_all(&bytes))?;
    }
    for s in sources_of(&corpus) {
        let n = corpus.docs().iter().filter(|d| d.source == s).count();
        summary.insert(format!("documents.{}", s.as_str()), n);
    }
    let json = serde_json::json!({ "config_sha256": ctx.hash, "counts": summary });
    ctx.write(STAGE, "ingest/summary.json", |w| writeln!(w, "{}", serde_json::to_string_pretty(&json)?))
}

#[derive(Serialize, Deserialize, PartialEq)]
struct IndexMeta {
    corpus_sha256: String,
    pipeline: lexalign::corpus::PipelineConfig,
}

/// Builds the index snapshot, reusing an existing one whose corpus digest
/// and pipeline match unless `force` is set.
pub fn index(ctx: &Ctx, force: bool) -> StageResult {
    const STAGE: &str = "index";
    let corpus_path = ctx.require(STAGE, CORPUS, "ingest")?;
    let meta = IndexMeta {
        corpus_sha256: sha256_file(&corpus_path).map_err(|e| CliError::input(STAGE, e.to_string()))?,
        pipeline: ctx.cfg.pipeline.clone(),
    };
    if !force && ctx.out(INDEX).is_file() {
        if let Ok(old) = fs::read(ctx.out(INDEX_META)) {
            if serde_json::from_slice::<IndexMeta>(&old).ok().as_ref() == Some(&meta) {
                info!("{STAGE}: snapshot is current, reusing {}", ctx.out(INDEX).display());
                return Ok(());
            }
        }
    }
    let corpus = ctx.load_corpus(STAGE)?;
    let index = build_index(&corpus).map_err(|e| CliError::from_lib(STAGE, e))?;
    info!("{STAGE}: {} documents, {} terms", index.n_docs(), index.vocab_size());
    ctx.write(STAGE, INDEX, |w| index.write_snapshot(w))?;
    ctx.write(STAGE, INDEX_META, |w| writeln!(w, "{}", serde_json::to_string_pretty(&meta)?))
}

pub fn retrieve(ctx: &Ctx) -> StageResult {
    const STAGE: &str = "retrieve";
    let index = ctx.load_index(STAGE)?;
    let sources = SourceMap::from_index(&index);
    ctx.write(STAGE, SOURCES, |w| sources.write_jsonl(w))?;
    for qt in ctx.query_types() {
        let queries = ctx.load_queries(STAGE, &qt)?;
        for &m in &ctx.cfg.retrieval.scorers {
            let sc = ctx.cfg.retrieval.scorer(m);
            let lists = search_all(&queries, &index, &sc, ctx.cfg.retrieval.k).map_err(|e| CliError::from_lib(STAGE, e))?;
            let unseen: usize = lists.iter().filter(|l| !l.unseen_terms.is_empty()).count();
            if unseen > 0 {
                info!("{STAGE}: {qt}/{}: {unseen} queries contain terms unseen in the collection", m.name());
            }
            ctx.write(STAGE, &run_rel(&qt, m), |w| trec::write_run(w, &lists, m.name()))?;
        }
    }
    Ok(())
}

pub fn profile(ctx: &Ctx, kind: ProfileKind) -> StageResult {
    const STAGE: &str = "profile";
    let corpus = ctx.load_corpus(STAGE)?;
    let sources = sources_of(&corpus);
    let parts: Vec<(Source, Corpus)> = sources.iter().map(|s| (s.clone(), corpus.filter_source(s))).collect();
    let dataset = &ctx.cfg.dataset;
    let r_c = ctx.cfg.profile.r_c;
    match kind {
        ProfileKind::Zipf => {
            let mut rows = Vec::new();
            for (s, part) in &parts {
                let table = rank_frequency(part.tokens()).map_err(|e| CliError::from_lib(STAGE, e))?;
                let fit = fit_zipf(&table, r_c).map_err(|e| CliError::from_lib(STAGE, e))?;
                ctx.write(STAGE, &format!("profile/rank_frequency.{}.tsv", s.as_str()), |w| table.write_tsv(w))?;
                rows.push(format!(
                    "{dataset},{},{r_c},{},{},{},{},{},{}",
                    s.as_str(),
                    fmt6_opt(fit.core.map(|c| c.alpha)),
                    fmt6_opt(fit.core.map(|c| c.r2)),
                    fmt6_opt(fit.ext.map(|c| c.alpha)),
                    fmt6_opt(fit.ext.map(|c| c.r2)),
                    fit.n_core,
                    fit.n_ext
                ));
            }
            ctx.report(STAGE, "profile/zipf.csv", |w| {
                writeln!(w, "corpus,source,r_c,alpha1,r2_core,alpha2,r2_ext,n_core,n_ext")?;
                rows.iter().try_for_each(|r| writeln!(w, "{r}"))
            })?;
            let human = corpus.filter_source(&Source::Human);
            let llm = corpus.filter_source(&Source::Llm);
            if !human.is_empty() && !llm.is_empty() {
                let shift = frequency_shift(human.tokens(), llm.tokens(), ctx.cfg.profile.shift_limit)
                    .map_err(|e| CliError::from_lib(STAGE, e))?;
                ctx.report(STAGE, "profile/frequency_shift.csv", |w| {
                    writeln!(w, "corpus,term,rel_freq_human,rel_freq_llm,delta")?;
                    for s in &shift {
                        writeln!(w, "{dataset},{},{},{},{}", s.term, fmt6(s.rel_freq_a), fmt6(s.rel_freq_b), fmt6(s.delta))?;
                    }
                    Ok(())
                })?;
            }
        }
        ProfileKind::Idf => {
            let (reference, name) = match &ctx.cfg.inputs.reference {
                Some(p) => {
                    let c = ingest_corpus(p).map_err(|e| CliError::from_lib(STAGE, e))?.tokenized(&ctx.cfg.pipeline);
                    let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("reference").to_string();
                    (build_index(&c).map_err(|e| CliError::from_lib(STAGE, e))?, name)
                }
                None if ctx.out(INDEX).is_file() => (ctx.load_index(STAGE)?, "mixed".to_string()),
                None => (build_index(&corpus).map_err(|e| CliError::from_lib(STAGE, e))?, "mixed".to_string()),
            };
            let mut rows = Vec::new();
            for (s, part) in &parts {
                let p = idf_profile(part.tokens(), &reference, &name, r_c).map_err(|e| CliError::from_lib(STAGE, e))?;
                rows.push(format!(
                    "{dataset},{},{},{r_c},{},{},{}",
                    s.as_str(),
                    p.reference,
                    fmt6_opt(p.mean_idf_core),
                    fmt6_opt(p.mean_idf_ext),
                    p.n_unseen
                ));
            }
            ctx.report(STAGE, "profile/idf.csv", |w| {
                writeln!(w, "corpus,source,reference,r_c,mean_idf_core,mean_idf_ext,n_unseen")?;
                rows.iter().try_for_each(|r| writeln!(w, "{r}"))
            })?;
        }
        ProfileKind::Ttr => {
            let mut rows = Vec::new();
            for (s, part) in &parts {
                let t = mean_ttr(part).map_err(|e| CliError::from_lib(STAGE, e))?;
                rows.push(format!("{dataset},{},{},{},{}", s.as_str(), fmt6(t.mean), t.n_docs, t.n_empty));
            }
            ctx.report(STAGE, "profile/ttr.csv", |w| {
                writeln!(w, "corpus,source,mean_ttr,n_docs,n_empty")?;
                rows.iter().try_for_each(|r| writeln!(w, "{r}"))
            })?;
        }
        ProfileKind::Synonyms => {
            let lexicon = match &ctx.cfg.inputs.synonyms {
                Some(p) => SynonymLexicon::read(p).map_err(|e| CliError::from_lib(STAGE, e))?,
                None => SynonymLexicon::sample(),
            };
            let (mut used, mut summary, mut members) = (Vec::new(), Vec::new(), Vec::new());
            for (s, part) in &parts {
                let st = synonym_cluster_stats(part.tokens(), &lexicon);
                for (id, n) in &st.used_sizes {
                    used.push(format!("{dataset},{},{id},{n}", s.as_str()));
                }
                summary.push(format!(
                    "{dataset},{},{},{},{}",
                    s.as_str(),
                    fmt6(st.mean_used_size),
                    st.n_active,
                    lexicon.len()
                ));
                if let Some(id) = &ctx.cfg.profile.synonym_cluster {
                    let dist = cluster_distribution(part.tokens(), &lexicon, id).map_err(|e| CliError::from_lib(STAGE, e))?;
                    for (term, f) in dist {
                        members.push(format!("{dataset},{},{id},{term},{f}", s.as_str()));
                    }
                }
            }
            ctx.report(STAGE, "profile/synonyms.csv", |w| {
                writeln!(w, "corpus,source,cluster,used_size")?;
                used.iter().try_for_each(|r| writeln!(w, "{r}"))
            })?;
            ctx.report(STAGE, "profile/synonym_summary.csv", |w| {
                writeln!(w, "corpus,source,mean_used_size,n_active,n_clusters")?;
                summary.iter().try_for_each(|r| writeln!(w, "{r}"))
            })?;
            if ctx.cfg.profile.synonym_cluster.is_some() {
                ctx.report(STAGE, "profile/synonym_cluster.csv", |w| {
                    writeln!(w, "corpus,source,cluster,term,frequency")?;
                    members.iter().try_for_each(|r| writeln!(w, "{r}"))
                })?;
            }
        }
    }
    Ok(())
}

pub fn metrics(ctx: &Ctx) -> StageResult {
    const STAGE: &str = "metrics";
    let qrels = if ctx.out(QRELS).is_file() {
        Some(Qrels::read(&ctx.out(QRELS)).map_err(|e| CliError::from_lib(STAGE, e))?)
    } else {
        None
    };
    let sources = match &qrels {
        Some(_) => {
            let p = ctx.require(STAGE, SOURCES, "retrieve")?;
            let f = fs::File::open(&p).map_err(|e| CliError::input(STAGE, e.to_string()))?;
            Some(SourceMap::read_jsonl(std::io::BufReader::new(f)).map_err(|e| CliError::from_lib(STAGE, e))?)
        }
        None => None,
    };
    let k = ctx.cfg.metrics.k;
    let mut rows: Vec<MetricRow> = Vec::new();
    for qt in ctx.query_types() {
        for &m in &ctx.cfg.retrieval.scorers {
            let lists = ctx.load_runs(STAGE, &qt, m)?;
            let test = TestConfig {
                resamples: ctx.cfg.metrics.resamples,
                seed: rng::derive_seed(ctx.cfg.seed, &format!("metrics/{qt}/{}", m.name())),
            };
            let pref = source_preference(&lists, m.name(), k, test).map_err(|e| CliError::from_lib(STAGE, e))?;
            rows.extend(pref.rows(&ctx.cfg.dataset, &qt));
            if let (Some(q), Some(s)) = (&qrels, &sources) {
                let rel = relevance_report(&lists, q, s, m.name(), k, test).map_err(|e| CliError::from_lib(STAGE, e))?;
                rows.extend(rel.rows(&ctx.cfg.dataset, &qt));
            }
        }
    }
    ctx.report(STAGE, "metrics/metrics.csv", |w| write_metric_csv(w, &rows))
}

fn write_alignment(ctx: &Ctx, stage: &'static str, prefix: &str, reports: &[AlignmentReport]) -> StageResult {
    ctx.report(stage, &format!("{prefix}alignment.csv"), |w| write_alignment_csv(w, reports))?;
    ctx.report(stage, &format!("{prefix}scatter.tsv"), |w| {
        writeln!(w, "dataset\tquery_type\tscorer\tdelta_kl\tdelta_masr")?;
        for r in reports {
            for (s, d) in &r.delta_masr {
                writeln!(w, "{}\t{}\t{s}\t{}\t{}", r.dataset, r.query_type, fmt6(r.delta_kl), fmt6(*d))?;
            }
        }
        Ok(())
    })?;
    if reports.len() >= 3 {
        let cors = correlate(reports).map_err(|e| CliError::from_lib(stage, e))?;
        write_correlations(ctx, stage, &format!("{prefix}correlations.csv"), &cors)?;
    } else {
        info!("{stage}: {} alignment points, correlation needs at least 3", reports.len());
    }
    Ok(())
}

fn write_correlations(ctx: &Ctx, stage: &'static str, rel: &str, cors: &[Correlation]) -> StageResult {
    ctx.report(stage, rel, |w| {
        writeln!(w, "scorer,pearson_r,p_value,n")?;
        for c in cors {
            writeln!(w, "{},{},{},{}", c.scorer, fmt6(c.pearson.r), fmt6(c.pearson.p_value), c.pearson.n)?;
        }
        Ok(())
    })
}

pub fn align(ctx: &Ctx) -> StageResult {
    const STAGE: &str = "align";
    let corpus = ctx.load_corpus(STAGE)?;
    let human_corpus = corpus.filter_source(&Source::Human);
    let human: Vec<&str> = human_corpus.tokens().collect();
    let llm_corpus = corpus.filter_source(&Source::Llm);
    let llm: Vec<&str> = llm_corpus.tokens().collect();
    let mut reports = Vec::new();
    for qt in ctx.query_types() {
        let queries = ctx.load_queries(STAGE, &qt)?;
        let q: Vec<&str> = queries.tokens().collect();
        let (kl_h, kl_l) = alignment_kl(&q, &human, &llm, ctx.cfg.align.epsilon).map_err(|e| CliError::from_lib(STAGE, e))?;
        let mut delta_masr = BTreeMap::new();
        for &m in &ctx.cfg.retrieval.scorers {
            let lists = ctx.load_runs(STAGE, &qt, m)?;
            let rep = source_preference(&lists, m.name(), ctx.cfg.metrics.k, TestConfig { resamples: 0, seed: 0 })
                .map_err(|e| CliError::from_lib(STAGE, e))?;
            delta_masr.insert(m.name().to_string(), rep.masr.delta);
        }
        reports.push(AlignmentReport {
            dataset: ctx.cfg.dataset.clone(),
            query_type: qt.clone(),
            kl_q_human: kl_h,
            kl_q_llm: kl_l,
            delta_kl: kl_l - kl_h,
            delta_masr,
        });
    }
    write_alignment(ctx, STAGE, "align/", &reports)
}

/// Runs the configured KL ladder and exports one of its mixtures as corpus
/// and query files for the downstream stages.
pub fn synth(ctx: &Ctx) -> StageResult {
    const STAGE: &str = "synth";
    let s = ctx
        .cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::Config("no [synth] section in the configuration".into()))?;
    let ladder = &s.ladder;
    let scorers: Vec<_> = ctx.cfg.retrieval.scorers.iter().map(|&m| ctx.cfg.retrieval.scorer(m)).collect();
    let outcome = run_ladder_experiment(ladder, &scorers).map_err(|e| CliError::from_lib(STAGE, e))?;
    write_alignment(ctx, STAGE, "synth/ladder_", &outcome.reports)?;
    for c in &outcome.correlations {
        info!("{STAGE}: {} r = {:.4} (p = {:.2e})", c.scorer, c.pearson.r, c.pearson.p_value);
    }

    let rung = s.llm_rung.unwrap_or(ladder.rungs - 1);
    let mix = ladder_mixture(ladder, rung).map_err(|e| CliError::from_lib(STAGE, e))?;
    ctx.write(STAGE, SYNTH_HUMAN, |w| mix.human.write_jsonl(w))?;
    ctx.write(STAGE, SYNTH_LLM, |w| mix.llm.write_jsonl(w))?;
    ctx.write(STAGE, SYNTH_QUERIES, |w| mix.queries.write_jsonl(w))
}

/// Every applicable stage in order, then a manifest of all artifacts.
pub fn report(ctx: &Ctx) -> StageResult {
    if ctx.cfg.synth.is_some() {
        synth(ctx)?;
    }
    ingest(ctx)?;
    index(ctx, false)?;
    retrieve(ctx)?;
    for kind in [ProfileKind::Zipf, ProfileKind::Idf, ProfileKind::Ttr, ProfileKind::Synonyms] {
        profile(ctx, kind)?;
    }
    metrics(ctx)?;
    align(ctx)?;
    manifest(ctx)
}

pub fn manifest(ctx: &Ctx) -> StageResult {
    const STAGE: &str = "report";
    let root = &ctx.cfg.output_dir;
    let config = {
        let mut c = ctx.cfg.clone();
        c.threads = 0;
        c.output_dir = PathBuf::new();
        c
    };
    ctx.write(STAGE, "config.json", |w| writeln!(w, "{}", serde_json::to_string_pretty(&config)?))?;
    let mut artifacts = Vec::new();
    for rel in list_files(root).map_err(|e| CliError::io(STAGE, e))? {
        if rel == Path::new("report.json") {
            continue;
        }
        let p = root.join(&rel);
        let bytes = fs::metadata(&p).map_err(|e| CliError::io(STAGE, e))?.len();
        artifacts.push(serde_json::json!({
            "path": rel.to_string_lossy().replace('\\', "/"),
            "bytes": bytes,
            "sha256": sha256_file(&p).map_err(|e| CliError::io(STAGE, e))?,
        }));
    }
    let json = serde_json::json!({
        "config_sha256": ctx.hash,
        "dataset": ctx.cfg.dataset,
        "artifacts": artifacts,
    });
    ctx.write(STAGE, "report.json", |w| writeln!(w, "{}", serde_json::to_string_pretty(&json)?))
}

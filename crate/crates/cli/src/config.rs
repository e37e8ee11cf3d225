use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lexalign::corpus::PipelineConfig;
use lexalign::linglab::DEFAULT_RC;
use lexalign::prefmetrics::DEFAULT_RESAMPLES;
use lexalign::scoring::{Model, ScorerConfig};
use lexalign::synthlab::LadderExperiment;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: String,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub inputs: Inputs,
    pub pipeline: PipelineConfig,
    pub retrieval: Retrieval,
    pub profile: Profile,
    pub metrics: Metrics,
    pub align: Align,
    pub synth: Option<Synth>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: "dataset".into(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            threads: 0,
            inputs: Inputs::default(),
            pipeline: PipelineConfig::default(),
            retrieval: Retrieval::default(),
            profile: Profile::default(),
            metrics: Metrics::default(),
            align: Align::default(),
            synth: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Corpus JSONL files, merged in order.
    pub corpus: Vec<PathBuf>,
    /// Query type → query JSONL.
    pub queries: BTreeMap<String, PathBuf>,
    pub qrels: Option<PathBuf>,
    /// Corpus whose document frequencies define the IDF profile.
    pub reference: Option<PathBuf>,
    /// Synonym lexicon TSV; the bundled sample when absent.
    pub synonyms: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Retrieval {
    pub k: usize,
    pub scorers: Vec<Model>,
    pub k1: f64,
    pub b: f64,
    pub lambda: f64,
    pub c: f64,
    pub z: f64,
    pub dfr_length_normalization: bool,
}

impl Default for Retrieval {
    fn default() -> Self {
        let d = ScorerConfig::new(Model::Bm25);
        Retrieval {
            k: 200,
            scorers: Model::ALL.to_vec(),
            k1: d.k1,
            b: d.b,
            lambda: d.lambda,
            c: d.c,
            z: d.z,
            dfr_length_normalization: d.dfr_length_normalization,
        }
    }
}

impl Retrieval {
    pub fn scorer(&self, model: Model) -> ScorerConfig {
        ScorerConfig {
            model,
            k1: self.k1,
            b: self.b,
            lambda: self.lambda,
            c: self.c,
            z: self.z,
            dfr_length_normalization: self.dfr_length_normalization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Profile {
    pub r_c: usize,
    /// Rows in the frequency-shift report.
    pub shift_limit: usize,
    /// Cluster whose member frequencies are reported.
    pub synonym_cluster: Option<String>,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            r_c: DEFAULT_RC,
            shift_limit: 50,
            synonym_cluster: Some("important".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Metrics {
    /// Cutoff for SR, NDSR, precision and NDCG.
    pub k: usize,
    pub resamples: usize,
}

impl Default for Metrics {
    fn default() -> Self {
        Metrics {
            k: 10,
            resamples: DEFAULT_RESAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Align {
    pub epsilon: f64,
}

impl Default for Align {
    fn default() -> Self {
        Align {
            epsilon: lexalign::alignment::DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Synth {
    /// Rung of the exported LLM corpus; the last rung when absent.
    pub llm_rung: Option<usize>,
    pub ladder: LadderExperiment,
}

/// Values given on the command line; `None` leaves lower layers in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub k: Option<usize>,
    pub r_c: Option<usize>,
    pub scorers: Vec<Model>,
}

const ENV_PREFIX: &str = "LEXALIGN_";

fn env_value<T: std::str::FromStr>(
    env: &BTreeMap<String, String>,
    name: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match env.get(&format!("{ENV_PREFIX}{name}")) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|e| CliError::Config(format!("{ENV_PREFIX}{name}={v:?}: {e}"))),
    }
}

impl RunConfig {
    /// Default, then file, then `LEXALIGN_*` variables, then flags.
    pub fn resolve(
        file: Option<&Path>,
        env: &BTreeMap<String, String>,
        flags: &Overrides,
    ) -> Result<RunConfig, CliError> {
        let mut cfg = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };

        if let Some(v) = env_value(env, "DATASET")? {
            cfg.dataset = v;
        }
        if let Some(v) = env_value::<String>(env, "OUTPUT_DIR")? {
            cfg.output_dir = v.into();
        }
        if let Some(v) = env_value(env, "SEED")? {
            cfg.seed = v;
        }
        if let Some(v) = env_value(env, "THREADS")? {
            cfg.threads = v;
        }
        if let Some(v) = env_value(env, "K")? {
            cfg.retrieval.k = v;
        }
        if let Some(v) = env_value(env, "R_C")? {
            cfg.profile.r_c = v;
        }

        if let Some(v) = &flags.dataset {
            cfg.dataset = v.clone();
        }
        if let Some(v) = &flags.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = flags.seed {
            cfg.seed = v;
        }
        if let Some(v) = flags.threads {
            cfg.threads = v;
        }
        if let Some(v) = flags.k {
            cfg.retrieval.k = v;
        }
        if let Some(v) = flags.r_c {
            cfg.profile.r_c = v;
        }
        if !flags.scorers.is_empty() {
            cfg.retrieval.scorers = flags.scorers.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.dataset.is_empty() || self.dataset.contains([',', '\n']) {
            return bad(format!("dataset name {:?} is empty or contains ',' or a newline", self.dataset));
        }
        if self.retrieval.k == 0 || self.metrics.k == 0 {
            return bad("retrieval.k and metrics.k must be positive".into());
        }
        if self.retrieval.scorers.is_empty() {
            return bad("retrieval.scorers is empty".into());
        }
        for &m in &self.retrieval.scorers {
            self.retrieval.scorer(m).validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.profile.r_c == 0 {
            return bad("profile.r_c must be positive".into());
        }
        if !(self.align.epsilon.is_finite() && self.align.epsilon >= 0.0) {
            return bad(format!("align.epsilon must be non-negative, got {}", self.align.epsilon));
        }
        for qt in self.inputs.queries.keys() {
            if qt.is_empty() || !qt.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("query type {qt:?} must be non-empty [A-Za-z0-9_-]"));
            }
        }
        if let Some(s) = &self.synth {
            let l = &s.ladder;
            if l.human_rung >= l.rungs || s.llm_rung.is_some_and(|r| r >= l.rungs) {
                return bad(format!("synth rungs out of range for a ladder of {} rungs", l.rungs));
            }
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration with `threads` and
    /// `output_dir` cleared, as lowercase hex.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = 0;
        c.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn precedence_flag_env_file_default() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        std::fs::write(&file, "seed = 5\n[retrieval]\nk = 50\n[profile]\nr_c = 100\n").unwrap();

        let c = RunConfig::resolve(None, &env(&[]), &Overrides::default()).unwrap();
        assert_eq!((c.seed, c.retrieval.k, c.profile.r_c), (0, 200, 2000));

        let c = RunConfig::resolve(Some(&file), &env(&[]), &Overrides::default()).unwrap();
        assert_eq!((c.seed, c.retrieval.k, c.profile.r_c), (5, 50, 100));

        let e = env(&[("LEXALIGN_SEED", "6"), ("LEXALIGN_K", "60")]);
        let c = RunConfig::resolve(Some(&file), &e, &Overrides::default()).unwrap();
        assert_eq!((c.seed, c.retrieval.k, c.profile.r_c), (6, 60, 100));

        let flags = Overrides {
            seed: Some(7),
            ..Default::default()
        };
        let c = RunConfig::resolve(Some(&file), &e, &flags).unwrap();
        assert_eq!((c.seed, c.retrieval.k, c.profile.r_c), (7, 60, 100));
    }

    #[test]
    fn defaults_follow_main_setting() {
        let c = RunConfig::default();
        assert!(!c.pipeline.stem && !c.pipeline.remove_stopwords);
        assert_eq!(c.retrieval.k, 200);
        assert_eq!(c.profile.r_c, 2000);
        assert_eq!((c.retrieval.k1, c.retrieval.b, c.retrieval.lambda), (0.9, 0.4, 0.1));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_env() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        std::fs::write(&file, "sede = 5\n").unwrap();
        let err = RunConfig::resolve(Some(&file), &env(&[]), &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::resolve(None, &env(&[("LEXALIGN_K", "many")]), &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hash_ignores_threads_and_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.threads = 8;
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}

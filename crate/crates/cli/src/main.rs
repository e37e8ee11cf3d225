use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lexalign::scoring::Model;
use log::error;

mod config;
mod error;
mod output;
mod stages;

use config::{Overrides, RunConfig};
use error::CliError;
use stages::{Ctx, ProfileKind};

/// Term-distribution profiling and source-preference analysis for mixed
/// human/LLM corpora.
#[derive(Debug, Parser)]
#[command(name = "lexalign", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Dataset label written into reports.
    #[arg(long, global = true)]
    dataset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read corpus, query and qrels files into the output directory.
    Ingest,
    /// Build the inverted index snapshot.
    Index {
        /// Rebuild even if the snapshot matches the corpus.
        #[arg(long)]
        force: bool,
    },
    /// Rank documents for every query and write TREC run files.
    Retrieve {
        /// Restrict to these scorers (repeatable).
        #[arg(long = "scorer", value_parser = parse_model)]
        scorers: Vec<Model>,
        /// Retrieval depth.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Corpus statistics per source.
    Profile {
        #[arg(value_enum)]
        kind: ProfileKind,
        /// Zipf breakpoint rank.
        #[arg(long)]
        r_c: Option<usize>,
    },
    /// Source-preference and relevance metrics from run files.
    Metrics {
        #[arg(long = "scorer", value_parser = parse_model)]
        scorers: Vec<Model>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Query-to-corpus KL divergences against ΔMASR.
    Align {
        #[arg(long = "scorer", value_parser = parse_model)]
        scorers: Vec<Model>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run the synthetic KL ladder and export one mixture as input files.
    Synth,
    /// Run every stage and write a manifest of all outputs.
    Report,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse::<Model>().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut flags = Overrides {
        dataset: cli.dataset,
        output_dir: cli.output_dir,
        seed: cli.seed,
        threads: cli.threads,
        ..Default::default()
    };
    match &cli.command {
        Command::Retrieve { scorers, k } | Command::Metrics { scorers, k } | Command::Align { scorers, k } => {
            flags.scorers = scorers.clone();
            flags.k = *k;
        }
        Command::Profile { r_c, .. } => flags.r_c = *r_c,
        _ => {}
    }
    let env: std::collections::BTreeMap<String, String> = std::env::vars().collect();
    let cfg = RunConfig::resolve(cli.config.as_deref(), &env, &flags)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let ctx = Ctx::new(cfg);
    match cli.command {
        Command::Ingest => stages::ingest(&ctx),
        Command::Index { force } => stages::index(&ctx, force),
        Command::Retrieve { .. } => stages::retrieve(&ctx),
        Command::Profile { kind, .. } => stages::profile(&ctx, kind),
        Command::Metrics { .. } => stages::metrics(&ctx),
        Command::Align { .. } => stages::align(&ctx),
        Command::Synth => stages::synth(&ctx),
        Command::Report => stages::report(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

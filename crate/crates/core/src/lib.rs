//! `lexalign`: measure how human-written and LLM-generated text differ in
//! term distribution, and show how that difference drives the source
//! preferences of classic term-based retrievers.
//!
//! The crate is organised by stage:
//!
//! - [`corpus`]: JSONL ingestion, tokenization pipeline, lexical overlap checks.
//! - [`index`]: immutable inverted index with collection statistics.
//! - [`scoring`]: TF-IDF cosine, BM25, Jelinek-Mercer query likelihood and
//!   DFR In-L-H2, plus exact top-k retrieval and TREC run I/O.
//! - [`linglab`]: rank-frequency tables, two-segment Zipf fits, smoothed IDF
//!   profiles, type-token ratio and synonym-cluster usage.
//! - [`prefmetrics`]: SR@k, NDSR@k, MASR, relevance metrics, relative deltas
//!   and paired permutation tests.
//! - [`alignment`]: term distributions, KL divergence, the query-likelihood
//!   expected-score bound, Monte-Carlo estimators, water-filling optima and
//!   Pearson correlation.
//! - [`synthlab`]: seeded synthetic corpora with double power-law vocabularies
//!   and KL ladders.

#![forbid(unsafe_code)]

pub mod alignment;
pub mod corpus;
pub mod error;
pub mod index;
pub mod linglab;
pub mod prefmetrics;
pub mod rng;
pub mod scoring;
pub mod synthlab;

pub use error::{Error, Result};

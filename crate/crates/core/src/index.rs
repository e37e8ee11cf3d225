//! Immutable in-memory inverted index with the collection statistics used by
//! the scorers and the distribution analyses.
//!
//! Internal document ordinals follow ascending document-id order and term
//! ordinals follow ascending term order, so the index does not depend on the
//! order documents were supplied in.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PipelineConfig, QuerySet, Source};
use crate::error::{Error, Result};

/// Dense document ordinal inside an [`Index`].
pub type DocId = u32;
/// Dense term ordinal inside an [`Index`].
pub type TermId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocId,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    /// Number of documents, `N`.
    pub n_docs: usize,
    /// Mean document length in tokens; also `L_d`.
    pub avgdl: f64,
    pub df: BTreeMap<String, u64>,
    pub cf: BTreeMap<String, u64>,
    pub total_tokens: u64,
    /// Mean query length `L_q`, when a query set was attached.
    pub mean_query_len: Option<f64>,
}

impl CollectionStats {
    pub fn mean_doc_len(&self) -> f64 {
        self.avgdl
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    terms: Vec<String>,
    term_lookup: HashMap<String, TermId>,
    postings: Vec<Vec<Posting>>,
    cf: Vec<u64>,
    doc_ids: Vec<String>,
    doc_lookup: HashMap<String, DocId>,
    doc_sources: Vec<Source>,
    doc_lengths: Vec<u32>,
    /// Forward lists, sorted by term id.
    doc_terms: Vec<Vec<(TermId, u32)>>,
    stats: CollectionStats,
    pipeline: Option<PipelineConfig>,
}

struct RawDoc {
    id: String,
    source: Source,
    terms: Vec<(TermId, u32)>,
}

pub fn build_index(corpus: &Corpus) -> Result<Index> {
    if !corpus.is_tokenized() {
        return Err(Error::State("build_index requires a tokenized corpus".into()));
    }
    let mut order: Vec<&crate::corpus::Document> = corpus.docs().iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));

    let counted: Vec<BTreeMap<&str, u32>> = order
        .par_iter()
        .map(|d| {
            let mut m = BTreeMap::new();
            for t in &d.tokens {
                *m.entry(t.as_str()).or_insert(0u32) += 1;
            }
            m
        })
        .collect();

    let vocab: BTreeSet<&str> = counted.iter().flat_map(|m| m.keys().copied()).collect();
    let terms: Vec<String> = vocab.into_iter().map(str::to_string).collect();
    let term_lookup: HashMap<String, TermId> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as TermId))
        .collect();

    let docs: Vec<RawDoc> = order
        .par_iter()
        .zip(counted.par_iter())
        .map(|(d, m)| RawDoc {
            id: d.id.clone(),
            source: d.source.clone(),
            // BTreeMap iteration is in term order, which is term-id order.
            terms: m.iter().map(|(t, &tf)| (term_lookup[*t], tf)).collect(),
        })
        .collect();

    let empty = docs.iter().filter(|d| d.terms.is_empty()).count();
    if empty > 0 {
        log::warn!("{empty} document(s) have no tokens; they are kept in N and avgdl");
    }
    Ok(Index::assemble(terms, docs, corpus.pipeline().cloned()))
}

impl Index {
    fn assemble(terms: Vec<String>, docs: Vec<RawDoc>, pipeline: Option<PipelineConfig>) -> Index {
        let mut postings: Vec<Vec<Posting>> = vec![Vec::new(); terms.len()];
        let mut cf = vec![0u64; terms.len()];
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_sources = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut doc_terms = Vec::with_capacity(docs.len());
        for (ordinal, d) in docs.into_iter().enumerate() {
            let mut len = 0u32;
            for &(t, tf) in &d.terms {
                postings[t as usize].push(Posting {
                    doc: ordinal as DocId,
                    tf,
                });
                cf[t as usize] += u64::from(tf);
                len += tf;
            }
            doc_ids.push(d.id);
            doc_sources.push(d.source);
            doc_lengths.push(len);
            doc_terms.push(d.terms);
        }
        let total_tokens: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let n_docs = doc_ids.len();
        let avgdl = if n_docs == 0 {
            0.0
        } else {
            total_tokens as f64 / n_docs as f64
        };
        let stats = CollectionStats {
            n_docs,
            avgdl,
            df: terms
                .iter()
                .zip(&postings)
                .map(|(t, p)| (t.clone(), p.len() as u64))
                .collect(),
            cf: terms.iter().cloned().zip(cf.iter().copied()).collect(),
            total_tokens,
            mean_query_len: None,
        };
        let term_lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        let doc_lookup = doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i as DocId))
            .collect();
        Index {
            terms,
            term_lookup,
            postings,
            cf,
            doc_ids,
            doc_lookup,
            doc_sources,
            doc_lengths,
            doc_terms,
            stats,
            pipeline,
        }
    }

    /// Record `L_q` for a query set.
    pub fn attach_query_stats(&mut self, queries: &QuerySet) {
        self.stats.mean_query_len = Some(queries.mean_length());
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn pipeline(&self) -> Option<&PipelineConfig> {
        self.pipeline.as_ref()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.stats.avgdl
    }

    pub fn total_tokens(&self) -> u64 {
        self.stats.total_tokens
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, t: TermId) -> &str {
        &self.terms[t as usize]
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_lookup.get(term).copied()
    }

    pub fn df(&self, t: TermId) -> u64 {
        self.postings[t as usize].len() as u64
    }

    pub fn cf(&self, t: TermId) -> u64 {
        self.cf[t as usize]
    }

    pub fn postings(&self, t: TermId) -> &[Posting] {
        &self.postings[t as usize]
    }

    pub fn doc_ordinal(&self, id: &str) -> Option<DocId> {
        self.doc_lookup.get(id).copied()
    }

    pub fn doc_id(&self, d: DocId) -> &str {
        &self.doc_ids[d as usize]
    }

    pub fn doc_source(&self, d: DocId) -> &Source {
        &self.doc_sources[d as usize]
    }

    pub fn doc_len(&self, d: DocId) -> u32 {
        self.doc_lengths[d as usize]
    }

    pub fn doc_terms(&self, d: DocId) -> &[(TermId, u32)] {
        &self.doc_terms[d as usize]
    }

    pub fn tf(&self, t: TermId, d: DocId) -> u32 {
        let terms = &self.doc_terms[d as usize];
        terms
            .binary_search_by_key(&t, |&(id, _)| id)
            .map(|i| terms[i].1)
            .unwrap_or(0)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = DocId> {
        0..self.doc_ids.len() as DocId
    }
}

/// The stats snapshot embedded in `index`.
pub fn collection_stats(index: &Index) -> CollectionStats {
    index.stats.clone()
}

const MAGIC: &[u8; 8] = b"LXALIDX\0";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SnapshotHeader {
    n_docs: usize,
    n_terms: usize,
    pipeline: Option<PipelineConfig>,
    mean_query_len: Option<f64>,
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Snapshot(format!("truncated: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn get_bytes<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Snapshot(format!("truncated: {e}")))?;
    Ok(buf)
}

fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let len = get_u32(r)? as usize;
    String::from_utf8(get_bytes(r, len)?).map_err(|e| Error::Snapshot(e.to_string()))
}

impl Index {
    /// Binary snapshot: 8-byte magic, little-endian `u32` version, a JSON
    /// header (length-prefixed), the term table, then one forward list per
    /// document. All integers are little-endian `u32`.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        put_u32(&mut w, SNAPSHOT_VERSION)?;
        let header = SnapshotHeader {
            n_docs: self.n_docs(),
            n_terms: self.terms.len(),
            pipeline: self.pipeline.clone(),
            mean_query_len: self.stats.mean_query_len,
        };
        let header = serde_json::to_vec(&header).map_err(std::io::Error::other)?;
        put_u32(&mut w, header.len() as u32)?;
        w.write_all(&header)?;
        for t in &self.terms {
            put_str(&mut w, t)?;
        }
        for d in 0..self.n_docs() {
            put_str(&mut w, &self.doc_ids[d])?;
            put_str(&mut w, self.doc_sources[d].as_str())?;
            put_u32(&mut w, self.doc_terms[d].len() as u32)?;
            for &(t, tf) in &self.doc_terms[d] {
                put_u32(&mut w, t)?;
                put_u32(&mut w, tf)?;
            }
        }
        w.flush()
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Index> {
        let magic = get_bytes(&mut r, MAGIC.len())?;
        if magic != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = get_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let header_len = get_u32(&mut r)? as usize;
        let header: SnapshotHeader = serde_json::from_slice(&get_bytes(&mut r, header_len)?)
            .map_err(|e| Error::Snapshot(format!("header: {e}")))?;
        let mut terms = Vec::with_capacity(header.n_terms);
        for _ in 0..header.n_terms {
            terms.push(get_str(&mut r)?);
        }
        let mut docs = Vec::with_capacity(header.n_docs);
        for _ in 0..header.n_docs {
            let id = get_str(&mut r)?;
            let source = Source::parse(&get_str(&mut r)?);
            let n = get_u32(&mut r)? as usize;
            let mut doc_terms = Vec::with_capacity(n);
            for _ in 0..n {
                let t = get_u32(&mut r)?;
                let tf = get_u32(&mut r)?;
                if t as usize >= terms.len() || tf == 0 {
                    return Err(Error::Snapshot(format!("bad posting in {id:?}")));
                }
                doc_terms.push((t, tf));
            }
            docs.push(RawDoc {
                id,
                source,
                terms: doc_terms,
            });
        }
        let mut index = Index::assemble(terms, docs, header.pipeline);
        index.stats.mean_query_len = header.mean_query_len;
        Ok(index)
    }
}

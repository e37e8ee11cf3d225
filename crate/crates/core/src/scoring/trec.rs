//! TREC run files and the doc-id → source sidecar.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::{RankedEntry, RankedList};
use crate::corpus::Source;
use crate::error::{Error, Result};
use crate::index::Index;

/// Write `qid Q0 docid rank score tag` lines, ranks from 1, scores with six
/// decimals. Lists are written in the given order.
pub fn write_run<W: Write>(mut w: W, lists: &[RankedList], tag: &str) -> std::io::Result<()> {
    for list in lists {
        for (i, e) in list.entries.iter().enumerate() {
            writeln!(w, "{} Q0 {} {} {:.6} {}", list.query_id, e.doc_id, i + 1, e.score, tag)?;
        }
    }
    Ok(())
}

/// Parse a run file. Sources come from `sources`; ids missing there become
/// `Source::Other("unknown")`. Entries are re-sorted by rank; queries keep
/// first-appearance order.
pub fn read_run<R: Read>(r: R, sources: &SourceMap, depth: usize) -> Result<Vec<RankedList>> {
    let mut order: Vec<String> = Vec::new();
    let mut by_query: BTreeMap<String, Vec<(usize, RankedEntry)>> = BTreeMap::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = |message: String| Error::Parse { line: n + 1, message };
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", f.len())));
        }
        let rank: usize = f[3].parse().map_err(|_| bad(format!("bad rank {:?}", f[3])))?;
        let score: f64 = f[4].parse().map_err(|_| bad(format!("bad score {:?}", f[4])))?;
        let entries = by_query.entry(f[0].to_string()).or_insert_with(|| {
            order.push(f[0].to_string());
            Vec::new()
        });
        entries.push((
            rank,
            RankedEntry {
                doc_id: f[2].to_string(),
                score,
                source: sources.get(f[2]).cloned().unwrap_or_else(|| Source::Other("unknown".into())),
            },
        ));
    }
    Ok(order
        .into_iter()
        .map(|qid| {
            let mut entries = by_query.remove(&qid).unwrap_or_default();
            entries.sort_by_key(|(rank, _)| *rank);
            let entries: Vec<RankedEntry> = entries.into_iter().map(|(_, e)| e).collect();
            RankedList {
                query_id: qid,
                depth: depth.max(entries.len()),
                entries,
                unseen_terms: Vec::new(),
            }
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct SidecarRecord {
    docid: String,
    source: Source,
}

/// Doc id → source label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap(BTreeMap<String, Source>);

impl SourceMap {
    pub fn from_index(index: &Index) -> Self {
        SourceMap(
            index
                .doc_ids()
                .map(|d| (index.doc_id(d).to_string(), index.doc_source(d).clone()))
                .collect(),
        )
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, source: Source) {
        self.0.insert(doc_id.into(), source);
    }

    pub fn get(&self, doc_id: &str) -> Option<&Source> {
        self.0.get(doc_id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// One `{"docid": .., "source": ..}` object per line, sorted by doc id.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (docid, source) in &self.0 {
            let rec = SidecarRecord {
                docid: docid.clone(),
                source: source.clone(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: Read>(r: R) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in BufReader::new(r).lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SidecarRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
            if map.insert(rec.docid.clone(), rec.source).is_some() {
                return Err(Error::DuplicateKey(rec.docid));
            }
        }
        Ok(SourceMap(map))
    }
}

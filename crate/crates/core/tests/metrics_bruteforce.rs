use std::collections::BTreeMap;

use lexalign::corpus::Source;
use lexalign::prefmetrics::{masr, ndsr_at_k, paired_significance, relevance_metrics, sr_at_k, RelevanceMode};
use lexalign::scoring::{RankedEntry, RankedList, SourceMap};
use lexalign_oracles::{metrics, stats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Labeled {
    list: RankedList,
    qrels: BTreeMap<String, u32>,
    sources: SourceMap,
}

fn random_list(seed: u64) -> Labeled {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let depth = r.random_range(1..=50);
    let mut qrels = BTreeMap::new();
    let mut sources = SourceMap::default();
    let entries = (0..depth)
        .map(|i| {
            let source = if r.random_bool(0.5) { Source::Human } else { Source::Llm };
            let id = format!("d{i:02}");
            if r.random_bool(0.6) {
                qrels.insert(id.clone(), r.random_range(0..=3));
            }
            sources.insert(id.clone(), source.clone());
            RankedEntry { doc_id: id, score: -(i as f64), source }
        })
        .collect();
    // judged documents that were not retrieved
    for j in 0..r.random_range(0..5) {
        let id = format!("x{j}");
        qrels.insert(id.clone(), r.random_range(1..=3));
        sources.insert(id, if r.random_bool(0.5) { Source::Human } else { Source::Llm });
    }
    if qrels.is_empty() {
        qrels.insert("d00".into(), 1);
    }
    Labeled {
        list: RankedList { query_id: format!("q{seed}"), depth, entries, unseen_terms: Vec::new() },
        qrels,
        sources,
    }
}

fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

#[test]
fn source_metrics_match_brute_force() {
    for seed in 0..1000 {
        let l = random_list(seed);
        let src = l.list.sources();
        for s in [Source::Human, Source::Llm] {
            let labels: Vec<bool> = src.iter().map(|x| *x == s).collect();
            for k in [1, 3, 5, 10, 20, 50, 60] {
                assert!(eq(sr_at_k(&src, &s, k).unwrap().value, metrics::sr(&labels, k)));
                assert!(eq(ndsr_at_k(&src, &s, k).unwrap().value, metrics::ndsr(&labels, k)));
            }
            match (masr(&src, &s), metrics::masr(&labels)) {
                (Some(a), Some(b)) => assert!(eq(a, b), "seed {seed}"),
                (None, None) => {}
                other => panic!("seed {seed}: {other:?}"),
            }
        }
        for k in 1..=src.len() {
            let h = sr_at_k(&src, &Source::Human, k).unwrap().value + sr_at_k(&src, &Source::Llm, k).unwrap().value;
            let n = ndsr_at_k(&src, &Source::Human, k).unwrap().value
                + ndsr_at_k(&src, &Source::Llm, k).unwrap().value;
            assert!(eq(h, 1.0) && eq(n, 1.0));
        }
    }
}

#[test]
fn relevance_metrics_match_brute_force() {
    for seed in 0..1000 {
        let l = random_list(seed);
        for k in [1, 5, 10, 20] {
            let grades: Vec<u32> = l.list.entries.iter().map(|e| l.qrels.get(&e.doc_id).copied().unwrap_or(0)).collect();
            let relevant: Vec<u32> = l.qrels.values().copied().filter(|&g| g > 0).collect();
            let m = relevance_metrics(&l.list, &l.qrels, RelevanceMode::Mixed, k).unwrap();
            assert_eq!(m.unjudged, relevant.is_empty());
            assert!(eq(m.precision_at_k, metrics::precision(&grades, k)));
            assert!(eq(m.ndcg_at_k, metrics::ndcg(&grades, &relevant, k)));
            assert!(eq(m.map, metrics::average_precision(&grades, relevant.len())));

            for s in [Source::Human, Source::Llm] {
                let filtered: Vec<u32> = l
                    .list
                    .entries
                    .iter()
                    .zip(&grades)
                    .map(|(e, &g)| if e.source == s { g } else { 0 })
                    .collect();
                let rel_s: Vec<u32> = l
                    .qrels
                    .iter()
                    .filter(|(d, &g)| g > 0 && l.sources.get(d) == Some(&s))
                    .map(|(_, &g)| g)
                    .collect();
                let m = relevance_metrics(&l.list, &l.qrels, RelevanceMode::SourceFiltered { source: &s, sources: &l.sources }, k)
                    .unwrap();
                assert!(eq(m.precision_at_k, if rel_s.is_empty() { 0.0 } else { metrics::precision(&filtered, k) }));
                assert!(eq(m.ndcg_at_k, metrics::ndcg(&filtered, &rel_s, k)));
                assert!(eq(m.map, metrics::average_precision(&filtered, rel_s.len())));
            }
        }
    }
}

#[test]
fn single_source_mixed_equals_filtered() {
    for seed in 0..200 {
        let mut l = random_list(seed);
        for e in &mut l.list.entries {
            e.source = Source::Human;
        }
        let mut sources = SourceMap::default();
        for d in l.qrels.keys() {
            sources.insert(d.clone(), Source::Human);
        }
        let mixed = relevance_metrics(&l.list, &l.qrels, RelevanceMode::Mixed, 10).unwrap();
        let filtered = relevance_metrics(
            &l.list,
            &l.qrels,
            RelevanceMode::SourceFiltered { source: &Source::Human, sources: &sources },
            10,
        )
        .unwrap();
        assert_eq!(mixed, filtered);
    }
}

#[test]
fn masr_rises_when_source_doc_moves_up() {
    for seed in 0..1000 {
        let l = random_list(seed);
        let src = l.list.sources();
        for s in [Source::Human, Source::Llm] {
            for i in 1..src.len() {
                if src[i] == s && src[i - 1] != s {
                    let mut swapped = src.clone();
                    swapped.swap(i - 1, i);
                    let before = masr(&src, &s).unwrap();
                    let after = masr(&swapped, &s).unwrap();
                    assert!(after > before, "seed {seed} pos {i}");
                    let labels: Vec<bool> = swapped.iter().map(|x| *x == s).collect();
                    assert!(eq(after, metrics::masr(&labels).unwrap()));
                }
            }
        }
    }
}

#[test]
fn exhaustive_sign_flip_matches_oracle() {
    let mut r = ChaCha8Rng::seed_from_u64(99);
    for n in 2..=12 {
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let p = paired_significance(&a, &b, 1 << 12, 0).unwrap();
        assert!((p - stats::sign_flip_exhaustive(&a, &b)).abs() < 1e-15, "n = {n}");
    }
}

#[test]
fn monte_carlo_sign_flip_is_close_to_exact() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let a: Vec<f64> = (0..16).map(|_| r.random_range(0.0..1.0)).collect();
    let b: Vec<f64> = a.iter().map(|x| x - 0.1 + r.random_range(-0.2..0.2)).collect();
    let exact = paired_significance(&a, &b, 1 << 16, 0).unwrap();
    let mc = paired_significance(&a, &b, 20_000, 3).unwrap();
    assert!((exact - mc).abs() < 0.01, "{exact} vs {mc}");
}

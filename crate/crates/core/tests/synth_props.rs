use std::collections::BTreeMap;

use lexalign::alignment::{kl_divergence, LengthLaw, TermDistribution};
use lexalign::corpus::Source;
use lexalign::linglab::{fit_zipf, rank_frequency};
use lexalign::synthlab::{
    default_scorers, gen_corpus, gen_queries, kl_ladder, run_ladder_experiment, GeneratorSpec, LadderExperiment,
};

fn empirical(tokens: &[&str], terms: &[String]) -> Vec<f64> {
    let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t).or_default() += 1.0;
    }
    let n = tokens.len() as f64;
    terms.iter().map(|t| counts.get(t.as_str()).copied().unwrap_or(0.0) / n).collect()
}

#[test]
fn two_term_uniform_queries_split_evenly() {
    let pq = TermDistribution::from_parts(vec!["a".into(), "b".into()], vec![1.0, 1.0], "uniform").unwrap();
    let qs = gen_queries(&pq, 100_000, LengthLaw::Fixed(10), 3, Source::Human).unwrap();
    let tokens: Vec<&str> = qs.tokens().collect();
    assert_eq!(tokens.len(), 1_000_000);
    let share = empirical(&tokens, pq.terms())[0];
    assert!((share - 0.5).abs() < 0.005, "{share}");
}

#[test]
fn query_marginal_converges_in_total_variation() {
    let spec = GeneratorSpec {
        vocab_size: 500,
        alpha1: 0.9,
        alpha2: 1.7,
        r_c: 50,
        n_docs: 1,
        doc_length: 1.0,
        seed: 0,
    };
    let pq = spec.distribution().unwrap();
    let qs = gen_queries(&pq, 125_000, LengthLaw::Poisson(8.0), 11, Source::Llm).unwrap();
    let tokens: Vec<&str> = qs.tokens().collect();
    assert!(tokens.len() > 990_000);
    let emp = empirical(&tokens, pq.terms());
    let tv: f64 = 0.5 * emp.iter().zip(pq.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv < 0.01, "{tv}");
}

#[test]
fn ladder_kl_is_increasing_and_on_target() {
    for seed in 0..5 {
        let spec = GeneratorSpec {
            vocab_size: 300,
            alpha1: 0.8,
            alpha2: 1.5,
            r_c: 30,
            n_docs: 1,
            doc_length: 1.0,
            seed,
        };
        let pq = spec.distribution().unwrap();
        let ladder = kl_ladder(&pq, 8, 1.5, seed).unwrap();
        assert_eq!(ladder[0].probs(), pq.probs());
        let kls: Vec<f64> = ladder.iter().map(|p| kl_divergence(&pq, p).unwrap()).collect();
        assert!(kls.windows(2).all(|w| w[1] > w[0]));
        for (i, kl) in kls.iter().enumerate().skip(1) {
            let target = 1.5 * i as f64 / 7.0;
            assert!((kl - target).abs() <= 0.05 * target, "rung {i}: {kl} vs {target}");
        }
    }
}

#[test]
fn zipf_exponents_recovered_at_moderate_scale() {
    let spec = GeneratorSpec {
        vocab_size: 3000,
        alpha1: 0.9,
        alpha2: 1.7,
        r_c: 300,
        n_docs: 10_000,
        doc_length: 200.0,
        seed: 21,
    };
    let corpus = gen_corpus(&spec, Source::Human).unwrap();
    let table = rank_frequency(corpus.tokens()).unwrap();
    let fit = fit_zipf(&table, spec.r_c).unwrap();
    let (a1, a2) = (fit.alpha1().unwrap(), fit.alpha2().unwrap());
    assert!((a1 - 0.9).abs() < 0.05, "{a1}");
    assert!((a2 - 1.7).abs() < 0.1, "{a2}");
    assert!(fit.core.unwrap().r2 > 0.99);
}

#[test]
fn closer_source_is_preferred_by_every_scorer() {
    let scorers = default_scorers();
    let seeds = 20;
    let mut agree: BTreeMap<String, usize> = BTreeMap::new();
    for seed in 0..seeds {
        let cfg = LadderExperiment {
            rungs: 3,
            human_rung: 0,
            n_docs: 200,
            n_queries: 100,
            seed,
            ..LadderExperiment::default()
        };
        let out = run_ladder_experiment(&cfg, &scorers).unwrap();
        let rep = &out.reports[2];
        assert!(rep.delta_kl > 0.0, "seed {seed}");
        for (name, d) in &rep.delta_masr {
            if *d > 0.0 {
                *agree.entry(name.clone()).or_default() += 1;
            }
        }
    }
    for sc in &scorers {
        let n = agree.get(sc.model.name()).copied().unwrap_or(0);
        assert!(n as f64 >= 0.9 * seeds as f64, "{}: {n}/{seeds}", sc.model.name());
    }
}

//! Slow, direct reference implementations used as test oracles.
//!
//! Nothing here shares code with `lexalign`: collections are plain token
//! vectors, every statistic is recounted from scratch on each call, and
//! formulas are written in their textbook form.

pub mod naive {
    //! Scorers over `docs: &[Vec<String>]`, recomputing every statistic.

    fn count(tokens: &[String], w: &str) -> f64 {
        tokens.iter().filter(|t| *t == w).count() as f64
    }

    fn df(docs: &[Vec<String>], w: &str) -> f64 {
        docs.iter().filter(|d| d.iter().any(|t| t == w)).count() as f64
    }

    fn vocab(docs: &[Vec<String>]) -> Vec<String> {
        let mut v: Vec<String> = docs.iter().flatten().cloned().collect();
        v.sort();
        v.dedup();
        v
    }

    fn avgdl(docs: &[Vec<String>]) -> f64 {
        docs.iter().map(|d| d.len() as f64).sum::<f64>() / docs.len() as f64
    }

    /// Dense cosine of `tf * ln(N/df)` vectors; 0 if either norm is 0.
    pub fn tfidf(docs: &[Vec<String>], query: &[String], d: usize) -> f64 {
        let n = docs.len() as f64;
        let v = vocab(docs);
        let weight = |tokens: &[String], w: &str| count(tokens, w) * (n / df(docs, w)).ln();
        let qv: Vec<f64> = v.iter().map(|w| weight(query, w)).collect();
        let dv: Vec<f64> = v.iter().map(|w| weight(&docs[d], w)).collect();
        let dot: f64 = qv.iter().zip(&dv).map(|(a, b)| a * b).sum();
        let nq = qv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nd = dv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nq == 0.0 || nd == 0.0 {
            0.0
        } else {
            dot / (nq * nd)
        }
    }

    pub fn bm25(docs: &[Vec<String>], query: &[String], d: usize, k1: f64, b: f64) -> f64 {
        let n = docs.len() as f64;
        let dl = docs[d].len() as f64;
        let avg = avgdl(docs);
        query
            .iter()
            .map(|w| {
                let tf = count(&docs[d], w);
                if tf == 0.0 {
                    return 0.0;
                }
                let dfw = df(docs, w);
                let idf = ((n - dfw + 0.5) / (dfw + 0.5)).ln();
                idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avg))
            })
            .sum()
    }

    /// Jelinek-Mercer query likelihood, `λ` on the collection model.
    pub fn ql(docs: &[Vec<String>], query: &[String], d: usize, lambda: f64) -> f64 {
        let total: f64 = docs.iter().map(|x| x.len() as f64).sum();
        let dl = docs[d].len() as f64;
        query
            .iter()
            .map(|w| {
                let cf: f64 = docs.iter().map(|x| count(x, w)).sum();
                let ml = if dl > 0.0 { count(&docs[d], w) / dl } else { 0.0 };
                ((1.0 - lambda) * ml + lambda * cf / total).ln()
            })
            .sum()
    }

    /// InL2 with H2 normalization (`normalize = false` gives plain InL2).
    pub fn dfr(docs: &[Vec<String>], query: &[String], d: usize, c: f64, normalize: bool) -> f64 {
        let n = docs.len() as f64;
        let dl = docs[d].len() as f64;
        let avg = avgdl(docs);
        query
            .iter()
            .map(|w| {
                let tf = count(&docs[d], w);
                if tf == 0.0 {
                    return 0.0;
                }
                let tfn = if normalize { tf * (1.0 + c * avg / dl).log2() } else { tf };
                let inf = tfn * ((n + 1.0) / (df(docs, w) + 0.5)).log2();
                inf / (tfn + 1.0)
            })
            .sum()
    }
}

pub mod metrics {
    //! Ranking metrics recomputed from their definitions. Labels are
    //! `true` for the source of interest.

    pub fn sr(labels: &[bool], k: usize) -> f64 {
        let k = k.min(labels.len());
        let mut hits = 0;
        for &l in labels.iter().take(k) {
            if l {
                hits += 1;
            }
        }
        hits as f64 / k as f64
    }

    pub fn ndsr(labels: &[bool], k: usize) -> f64 {
        let k = k.min(labels.len());
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 1..=k {
            let w = 1.0 / (1.0 + i as f64).log2();
            den += w;
            if labels[i - 1] {
                num += w;
            }
        }
        num / den
    }

    /// Average over source positions of the prefix ratio, each prefix
    /// recounted from scratch.
    pub fn masr(labels: &[bool]) -> Option<f64> {
        let positions: Vec<usize> = (1..=labels.len()).filter(|&i| labels[i - 1]).collect();
        if positions.is_empty() {
            return None;
        }
        let total: f64 = positions.iter().map(|&i| sr(labels, i)).sum();
        Some(total / positions.len() as f64)
    }

    pub fn dcg(grades: &[u32], k: usize) -> f64 {
        grades
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, &g)| g as f64 / (i as f64 + 2.0).log2())
            .sum()
    }

    /// `all_relevant`: grades of every judged-relevant document.
    pub fn ndcg(grades: &[u32], all_relevant: &[u32], k: usize) -> f64 {
        let mut ideal = all_relevant.to_vec();
        ideal.sort_by(|a, b| b.cmp(a));
        let idcg = dcg(&ideal, k);
        if idcg == 0.0 {
            0.0
        } else {
            dcg(grades, k) / idcg
        }
    }

    pub fn precision(grades: &[u32], k: usize) -> f64 {
        grades.iter().take(k).filter(|&&g| g > 0).count() as f64 / k as f64
    }

    pub fn average_precision(grades: &[u32], n_relevant: usize) -> f64 {
        if n_relevant == 0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 1..=grades.len() {
            if grades[i - 1] > 0 {
                sum += precision(grades, i);
            }
        }
        sum / n_relevant as f64
    }
}

pub mod stats {
    /// Exhaustive two-sided sign-flip p-value on paired differences.
    pub fn sign_flip_exhaustive(a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let n = d.len();
        let observed = (d.iter().sum::<f64>() / n as f64).abs();
        let mut hits = 0u64;
        for mask in 0..(1u64 << n) {
            let mut s = 0.0;
            for (i, x) in d.iter().enumerate() {
                s += if mask & (1 << i) != 0 { -x } else { *x };
            }
            if (s / n as f64).abs() >= observed - 1e-12 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }
}

pub mod simplex {
    //! Numeric maximization of a concave function on the probability simplex.

    fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..200 {
            if hi - lo < 1e-15 {
                break;
            }
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            }
        }
        0.5 * (lo + hi)
    }

    /// Pairwise coordinate ascent: repeatedly move mass between two
    /// coordinates by a golden-section line search. For a separable concave
    /// objective this converges to the constrained maximum.
    pub fn maximize(f: impl Fn(&[f64]) -> f64, n: usize, sweeps: usize) -> Vec<f64> {
        let mut p = vec![1.0 / n as f64; n];
        for _ in 0..sweeps {
            let before = p.clone();
            for i in 0..n {
                for j in (i + 1)..n {
                    let total = p[i] + p[j];
                    let x = golden_max(
                        |x| {
                            let mut q = p.clone();
                            q[i] = x;
                            q[j] = total - x;
                            f(&q)
                        },
                        0.0,
                        total,
                    );
                    p[i] = x;
                    p[j] = total - x;
                }
            }
            let moved: f64 = p.iter().zip(&before).map(|(a, b)| (a - b).abs()).sum();
            if moved < 1e-13 {
                break;
            }
        }
        p
    }

    /// Best point of a regular grid with step `1/steps` on the 2-simplex.
    pub fn grid_max_2(f: impl Fn(&[f64]) -> f64, steps: usize) -> Vec<f64> {
        (0..=steps)
            .map(|i| {
                let x = i as f64 / steps as f64;
                vec![x, 1.0 - x]
            })
            .max_by(|a, b| f(a).total_cmp(&f(b)))
            .expect("non-empty grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn naive_three_doc_values() {
        let docs = vec![toks("apple banana apple"), toks("banana cherry"), toks("cherry cherry")];
        let q = toks("apple");
        assert!((naive::bm25(&docs, &q, 0, 0.9, 0.4) - 0.646_430_1).abs() < 1e-6);
        assert!((naive::ql(&docs, &q, 0, 0.1) + 0.464_305_6).abs() < 1e-6);
        assert!((naive::dfr(&docs, &q, 0, 1.0, true) - 0.883_098_5).abs() < 1e-6);
        assert!((naive::tfidf(&docs, &q, 0) - 0.983_396_3).abs() < 1e-6);
    }

    #[test]
    fn masr_table3() {
        let l: Vec<bool> = "HHLLHHLHLH".chars().map(|c| c == 'H').collect();
        assert!((metrics::masr(&l).unwrap() - 0.748_611).abs() < 1e-6);
    }

    #[test]
    fn simplex_maximizer_finds_sqrt_law() {
        let f = |p: &[f64]| 0.25 * p[0].sqrt() * 2.0 + 0.75 * p[1].ln().max(-1e9);
        let p = simplex::maximize(f, 2, 100);
        let g = simplex::grid_max_2(f, 100_000);
        assert!((p[0] - g[0]).abs() < 1e-4);
    }

    #[test]
    fn sign_flip_all_equal() {
        let a = vec![1.0; 12];
        let b = vec![0.0; 12];
        assert_eq!(stats::sign_flip_exhaustive(&a, &b), 2.0 / 4096.0);
    }
}

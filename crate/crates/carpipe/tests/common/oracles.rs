//! Deliberately naive reference implementations.

use std::collections::BTreeMap;

use carpipe_core::corpus::{Paragraph, Qrels};
use carpipe_core::eval::Run;
use carpipe_core::text::tokenize;

/// Scores every paragraph against every query token from scratch, with no
/// index: `(id, score)` best first, ties by id.
pub fn exhaustive_bm25(paragraphs: &[Paragraph], query: &[String], k: usize) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = paragraphs.iter().map(|p| tokenize(&p.text)).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut out = Vec::new();
    for (p, doc) in paragraphs.iter().zip(&docs) {
        let mut score = 0.0;
        let mut matched = false;
        for t in query {
            let tf = doc.iter().filter(|w| *w == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            matched = true;
            let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            let norm = 1.2 * (1.0 - 0.75 + 0.75 * doc.len() as f64 / avg);
            score += idf * (tf * 2.2) / (tf + norm);
        }
        if matched {
            out.push((p.id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out.truncate(k);
    out
}

/// `[map, r_prec, mrr, ndcg]` for one ranking, written straight from the
/// textbook definitions.
pub fn metrics(ranking: &[String], judged: &BTreeMap<String, i32>) -> [f64; 4] {
    let rel = |id: &String| judged.get(id).is_some_and(|&g| g >= 1);
    let r = judged.values().filter(|&&g| g >= 1).count();
    let prec_at = |k: usize| ranking[..k].iter().filter(|d| rel(d)).count() as f64 / k as f64;
    let ap = (1..=ranking.len())
        .filter(|&k| rel(&ranking[k - 1]))
        .map(prec_at)
        .sum::<f64>()
        / r as f64;
    let rprec = ranking.iter().take(r).filter(|d| rel(d)).count() as f64 / r as f64;
    let mrr = ranking.iter().position(rel).map_or(0.0, |i| 1.0 / (i as f64 + 1.0));
    let gain = |g: i32| f64::from(g.max(0));
    let dcg: f64 = ranking
        .iter()
        .enumerate()
        .map(|(i, d)| gain(judged.get(d).copied().unwrap_or(0)) / ((i + 2) as f64).log2())
        .sum();
    let mut ideal: Vec<i32> = judged.values().copied().collect();
    ideal.sort_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .enumerate()
        .map(|(i, &g)| gain(g) / ((i + 2) as f64).log2())
        .sum();
    [ap, rprec, mrr, dcg / idcg]
}

/// Mean metrics over run queries with a relevant judgment; with `exclude`,
/// unjudged paragraphs are dropped first.
pub fn mean_metrics(run: &Run, qrels: &Qrels, exclude: bool) -> ([f64; 4], usize) {
    let mut sum = [0.0; 4];
    let mut n = 0;
    for (qid, ranking) in run {
        let Some(judged) = qrels.get(qid) else { continue };
        if !judged.values().any(|&g| g >= 1) {
            continue;
        }
        let ids: Vec<String> = ranking
            .iter()
            .map(|d| d.paragraph_id.clone())
            .filter(|id| !exclude || judged.contains_key(id))
            .collect();
        for (s, v) in sum.iter_mut().zip(metrics(&ids, judged)) {
            *s += v;
        }
        n += 1;
    }
    (sum.map(|s| s / n as f64), n)
}

/// `out[k] = Σ_i a[i]·b[(i+k) mod d]`.
pub fn correlation(a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = a.len();
    (0..d).map(|k| (0..d).map(|i| a[i] * b[(i + k) % d]).sum()).collect()
}

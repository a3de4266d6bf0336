//! TREC-style evaluation: MAP, R-Prec, MRR and nDCG, condensed lists and
//! the heading-frequency stratified breakdown.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{check_grade, Qrels, Query};
use crate::error::{invalid, Result};
use crate::facets::HeadingFrequencyTable;
use crate::retrieval::ScoredDoc;

/// qid → ranking, best first.
pub type Run = BTreeMap<String, Vec<ScoredDoc>>;

/// Grades of one query's judged paragraphs.
pub type Judged = BTreeMap<String, i32>;

pub const RELEVANCE_THRESHOLD: i32 = 1;

pub fn binarize(grade: i32) -> Result<bool> {
    Ok(check_grade(grade)? >= RELEVANCE_THRESHOLD)
}

fn is_relevant(judged: &Judged, id: &str) -> bool {
    judged.get(id).is_some_and(|&g| g >= RELEVANCE_THRESHOLD)
}

fn n_relevant(judged: &Judged) -> usize {
    judged.values().filter(|&&g| g >= RELEVANCE_THRESHOLD).count()
}

/// Drop unjudged paragraphs, keeping relative order.
pub fn condense(run: &Run, qrels: &Qrels) -> Run {
    run.iter()
        .map(|(qid, ranking)| {
            let kept = match qrels.get(qid) {
                Some(judged) => ranking
                    .iter()
                    .filter(|d| judged.contains_key(&d.paragraph_id))
                    .cloned()
                    .collect(),
                None => Vec::new(),
            };
            (qid.clone(), kept)
        })
        .collect()
}

pub fn average_precision(ranking: &[ScoredDoc], judged: &Judged) -> f64 {
    let r = n_relevant(judged);
    if r == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranking.iter().enumerate() {
        if is_relevant(judged, &d.paragraph_id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / r as f64
}

pub fn r_precision(ranking: &[ScoredDoc], judged: &Judged) -> f64 {
    let r = n_relevant(judged);
    if r == 0 {
        return 0.0;
    }
    let hits = ranking
        .iter()
        .take(r)
        .filter(|d| is_relevant(judged, &d.paragraph_id))
        .count();
    hits as f64 / r as f64
}

pub fn reciprocal_rank(ranking: &[ScoredDoc], judged: &Judged) -> f64 {
    ranking
        .iter()
        .position(|d| is_relevant(judged, &d.paragraph_id))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

fn discount(rank0: usize) -> f64 {
    1.0 / libm::log2(rank0 as f64 + 2.0)
}

/// nDCG over the full ranking; gain is the grade clamped at 0.
pub fn ndcg(ranking: &[ScoredDoc], judged: &Judged) -> f64 {
    let mut ideal: Vec<i32> = judged.values().map(|&g| g.max(0)).filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal.iter().enumerate().map(|(i, &g)| f64::from(g) * discount(i)).sum();
    if idcg == 0.0 {
        return 0.0;
    }
    let dcg: f64 = ranking
        .iter()
        .enumerate()
        .map(|(i, d)| f64::from(judged.get(&d.paragraph_id).copied().unwrap_or(0).max(0)) * discount(i))
        .sum();
    dcg / idcg
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JudgmentMode {
    /// Unjudged paragraphs count as non-relevant.
    Include,
    /// Unjudged paragraphs are removed before scoring.
    Exclude,
}

impl JudgmentMode {
    pub fn name(self) -> &'static str {
        match self {
            JudgmentMode::Include => "include",
            JudgmentMode::Exclude => "exclude",
        }
    }
}

impl core::str::FromStr for JudgmentMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "include" => Ok(Self::Include),
            "exclude" => Ok(Self::Exclude),
            _ => Err(invalid(alloc::format!(
                "unknown judgment mode `{s}` (expected include|exclude)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub map: f64,
    pub r_prec: f64,
    pub mrr: f64,
    pub ndcg: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 4] = ["map", "r_prec", "mrr", "ndcg"];

    pub fn of(ranking: &[ScoredDoc], judged: &Judged) -> Self {
        Self {
            map: average_precision(ranking, judged),
            r_prec: r_precision(ranking, judged),
            mrr: reciprocal_rank(ranking, judged),
            ndcg: ndcg(ranking, judged),
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.map, self.r_prec, self.mrr, self.ndcg]
    }

    fn mean(items: &[Metrics]) -> Self {
        if items.is_empty() {
            return Self::default();
        }
        let n = items.len() as f64;
        let sum = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Self {
            map: sum(|m| m.map),
            r_prec: sum(|m| m.r_prec),
            mrr: sum(|m| m.mrr),
            ndcg: sum(|m| m.ndcg),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub mode: JudgmentMode,
    pub per_query: Vec<(String, Metrics)>,
    pub mean: Metrics,
    /// Run queries without any relevant judgment; excluded from the mean.
    pub skipped: Vec<String>,
}

impl MetricReport {
    pub fn n_queries(&self) -> usize {
        self.per_query.len()
    }
}

/// Score every run query that has at least one relevant judgment.
pub fn evaluate(run: &Run, qrels: &Qrels, mode: JudgmentMode) -> Result<MetricReport> {
    if !run.keys().any(|q| qrels.get(q).is_some()) {
        return Err(invalid("run and qrels share no query ids"));
    }
    let condensed;
    let run = match mode {
        JudgmentMode::Include => run,
        JudgmentMode::Exclude => {
            condensed = condense(run, qrels);
            &condensed
        }
    };
    let mut per_query = Vec::new();
    let mut skipped = Vec::new();
    for (qid, ranking) in run {
        match qrels.get(qid) {
            Some(judged) if n_relevant(judged) > 0 => per_query.push((qid.clone(), Metrics::of(ranking, judged))),
            _ => skipped.push(qid.clone()),
        }
    }
    let mean = Metrics::mean(&per_query.iter().map(|(_, m)| *m).collect::<Vec<_>>());
    Ok(MetricReport {
        mode,
        per_query,
        mean,
        skipped,
    })
}

/// Mean R-Precision over run queries with relevant judgments.
pub fn mean_r_precision(run: &Run, qrels: &Qrels) -> f64 {
    let values: Vec<f64> = run
        .iter()
        .filter_map(|(qid, ranking)| {
            let judged = qrels.get(qid)?;
            (n_relevant(judged) > 0).then(|| r_precision(ranking, judged))
        })
        .collect();
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub const STRATUM_LABELS: [&str; 6] = ["Infrq.", "0-20%", "20-40%", "40-60%", "60-80%", "80-100%"];

#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub label: &'static str,
    pub count: usize,
    /// `None` for an empty stratum.
    pub map: Option<f64>,
}

/// Mean AP per main-heading frequency stratum. Queries whose main heading
/// never occurs in the training table go to "Infrq."; the rest are bucketed
/// by the table's quintile edges.
pub fn stratified_report(
    run: &Run,
    qrels: &Qrels,
    outlines: &[Query],
    table: &HeadingFrequencyTable,
    mode: JudgmentMode,
) -> Result<Vec<Stratum>> {
    let report = evaluate(run, qrels, mode)?;
    let by_qid: BTreeMap<&str, &Query> = outlines.iter().map(|q| (q.qid.as_str(), q)).collect();
    let mut sums = [(0usize, 0.0f64); 6];
    for (qid, m) in &report.per_query {
        let Some(q) = by_qid.get(qid.as_str()) else { continue };
        let bucket = table.quintile(q.main()).map_or(0, |b| b + 1);
        sums[bucket].0 += 1;
        sums[bucket].1 += m.map;
    }
    Ok(STRATUM_LABELS
        .iter()
        .zip(sums)
        .map(|(&label, (count, total))| Stratum {
            label,
            count,
            map: (count > 0).then(|| total / count as f64),
        })
        .collect())
}

/// Sanity check used by tests and the CLI: no paragraph twice per query.
pub fn check_run(run: &Run) -> Result<()> {
    for (qid, ranking) in run {
        let mut seen = BTreeSet::new();
        if let Some(d) = ranking.iter().find(|d| !seen.insert(d.paragraph_id.as_str())) {
            return Err(invalid(alloc::format!(
                "paragraph `{}` ranked twice for `{qid}`",
                d.paragraph_id
            )));
        }
        if ranking.iter().any(|d| !d.score.is_finite()) {
            return Err(invalid(alloc::format!("non-finite score for `{qid}`")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn ranking(ids: &[&str]) -> Vec<ScoredDoc> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| ScoredDoc::new(*id, -(i as f64)))
            .collect()
    }

    fn judged(pairs: &[(&str, i32)]) -> Judged {
        pairs.iter().map(|(p, g)| (p.to_string(), *g)).collect()
    }

    #[test]
    fn binarize_threshold() {
        assert!(binarize(3).unwrap());
        assert!(binarize(1).unwrap());
        assert!(!binarize(0).unwrap());
        assert!(!binarize(-2).unwrap());
        assert!(binarize(4).is_err());
    }

    #[test]
    fn metric_definitions() {
        let j = judged(&[("c", 1)]);
        assert!((reciprocal_rank(&ranking(&["a", "b", "c"]), &j) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(reciprocal_rank(&ranking(&["a"]), &j), 0.0);

        let j = judged(&[("a", 1), ("z", 2), ("b", 0)]);
        assert_eq!(r_precision(&ranking(&["a", "b"]), &j), 0.5);
        assert_eq!(average_precision(&ranking(&["a", "b"]), &j), 0.5);

        let j = judged(&[("a", 3), ("b", 0), ("c", 1)]);
        let n = ndcg(&ranking(&["a", "b", "c"]), &j);
        let expected = 3.5 / (3.0 + 1.0 / libm::log2(3.0));
        assert!((n - expected).abs() < 1e-12);
        assert!((n - 0.963_9).abs() < 1e-4);
    }

    #[test]
    fn condense_filters_unjudged() {
        let mut qrels = Qrels::new();
        qrels.insert("q", "p1", 1).unwrap();
        qrels.insert("q", "p3", 0).unwrap();
        let mut run = Run::new();
        run.insert("q".into(), ranking(&["p1", "p2", "p3"]));
        run.insert("other".into(), ranking(&["p1"]));
        let c = condense(&run, &qrels);
        let ids: Vec<&str> = c["q"].iter().map(|d| d.paragraph_id.as_str()).collect();
        assert_eq!(ids, vec!["p1", "p3"]);
        assert!(c["other"].is_empty());
        assert_eq!(condense(&c, &qrels), c);
    }

    #[test]
    fn perfect_and_empty_runs() {
        let mut qrels = Qrels::new();
        qrels.insert("q", "a", 3).unwrap();
        qrels.insert("q", "b", 1).unwrap();
        qrels.insert("q", "c", 0).unwrap();
        let mut run = Run::new();
        run.insert("q".into(), ranking(&["a", "b", "c"]));
        let r = evaluate(&run, &qrels, JudgmentMode::Include).unwrap();
        assert_eq!(r.mean.values(), [1.0; 4]);

        run.insert("q".into(), ranking(&["c", "x"]));
        let r = evaluate(&run, &qrels, JudgmentMode::Include).unwrap();
        assert_eq!(r.mean.values(), [0.0; 4]);
    }

    #[test]
    fn queries_without_relevant_are_skipped() {
        let mut qrels = Qrels::new();
        qrels.insert("q1", "a", 1).unwrap();
        qrels.insert("q2", "a", 0).unwrap();
        let mut run = Run::new();
        run.insert("q1".into(), ranking(&["a"]));
        run.insert("q2".into(), ranking(&["a"]));
        let r = evaluate(&run, &qrels, JudgmentMode::Exclude).unwrap();
        assert_eq!(r.n_queries(), 1);
        assert_eq!(r.skipped, vec!["q2".to_string()]);

        let mut disjoint = Run::new();
        disjoint.insert("zz".into(), ranking(&["a"]));
        assert!(evaluate(&disjoint, &qrels, JudgmentMode::Include).is_err());
    }

    #[test]
    fn strata_assignment() {
        let counts = (1..=100u32).map(|i| (alloc::format!("h{i}"), i));
        let table = HeadingFrequencyTable::from_counts(counts).unwrap();
        let outlines = vec![
            Query::new("rare", ["T", "never seen"]).unwrap(),
            Query::new("freq", ["T", "h95"]).unwrap(),
        ];
        let mut qrels = Qrels::new();
        let mut run = Run::new();
        for q in ["rare", "freq"] {
            qrels.insert(q, "a", 1).unwrap();
            run.insert(q.into(), ranking(&["b", "a"]));
        }
        let strata = stratified_report(&run, &qrels, &outlines, &table, JudgmentMode::Include).unwrap();
        assert_eq!(strata[0].label, "Infrq.");
        assert_eq!(strata[0].count, 1);
        assert_eq!(strata[0].map, Some(0.5));
        assert_eq!(strata[5].count, 1);
        assert_eq!(strata[2].count, 0);
        assert_eq!(strata[2].map, None);
    }
}

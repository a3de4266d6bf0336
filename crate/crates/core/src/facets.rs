//! Heading-utility estimators.
//!
//! Two contextual signals are derived for every query token: the role of the
//! heading it came from (title, intermediate or main) and a stratified
//! heading frequency, i.e. the number of training articles that use the
//! exact same heading text. Frequent headings ("History", "Early life") are
//! structural and rarely appear verbatim in relevant answers; rare ones are
//! topical.
//!
//! The analysis half of the module measures that effect directly through the
//! term occurrence rate of a heading, a Gaussian KDE of those rates, and a
//! frequency-binned average.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{HeadingRole, Paragraph, Query};
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::text::tokenize;

/// Percentiles used to stratify heading frequency into `0..=3`.
pub const STRATUM_PERCENTILES: [f64; 3] = [60.0, 90.0, 99.0];
/// Percentiles bounding the evaluation quintiles.
pub const QUINTILE_PERCENTILES: [f64; 5] = [20.0, 40.0, 60.0, 80.0, 100.0];
pub const FREQUENCY_BIN_WIDTH: u32 = 100;

/// Case-insensitive exact heading key.
pub fn normalize_heading(heading: &str) -> String {
    heading.trim().to_lowercase()
}

/// Nearest-rank percentile of an ascending-sorted, non-empty slice.
pub fn nearest_rank(sorted: &[u32], percentile: f64) -> u32 {
    let n = sorted.len();
    let rank = libm::ceil(percentile / 100.0 * n as f64) as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadingFrequencyTable {
    freq: BTreeMap<String, u32>,
    breakpoints: [u32; 3],
    quintile_edges: [u32; 5],
}

impl HeadingFrequencyTable {
    /// Count, for every heading text, the number of articles using it. An
    /// article is the set of outlines sharing a title; the title itself is
    /// one of that article's headings.
    pub fn from_outlines(outlines: &[Query]) -> Result<Self> {
        if outlines.is_empty() {
            return Err(Error::Empty("outline set"));
        }
        let mut articles: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for q in outlines {
            let set = articles.entry(normalize_heading(q.title())).or_default();
            set.extend(q.headings.iter().map(|h| normalize_heading(h)));
        }
        let mut freq: BTreeMap<String, u32> = BTreeMap::new();
        for headings in articles.into_values() {
            for h in headings {
                *freq.entry(h).or_insert(0) += 1;
            }
        }
        Self::from_counts(freq)
    }

    /// Rebuild from stored counts; breakpoints are derived.
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u32)>) -> Result<Self> {
        let mut freq = BTreeMap::new();
        for (h, c) in counts {
            if c == 0 {
                return Err(invalid(alloc::format!("heading `{h}` has frequency 0")));
            }
            let key = normalize_heading(&h);
            if freq.insert(key.clone(), c).is_some() {
                return Err(Error::Duplicate(key));
            }
        }
        if freq.is_empty() {
            return Err(Error::Empty("heading frequency table"));
        }
        let mut sorted: Vec<u32> = freq.values().copied().collect();
        sorted.sort_unstable();
        let breakpoints = STRATUM_PERCENTILES.map(|p| nearest_rank(&sorted, p));
        let quintile_edges = QUINTILE_PERCENTILES.map(|p| nearest_rank(&sorted, p));
        Ok(Self {
            freq,
            breakpoints,
            quintile_edges,
        })
    }

    /// Article count of a heading; 0 when unseen.
    pub fn frequency(&self, heading: &str) -> u32 {
        self.freq.get(&normalize_heading(heading)).copied().unwrap_or(0)
    }

    pub fn contains(&self, heading: &str) -> bool {
        self.freq.contains_key(&normalize_heading(heading))
    }

    pub fn breakpoints(&self) -> [u32; 3] {
        self.breakpoints
    }

    pub fn quintile_edges(&self) -> [u32; 5] {
        self.quintile_edges
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.freq.iter().map(|(h, c)| (h.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn stratify(&self, heading: &str) -> u8 {
        stratum_of(self.frequency(heading), self.breakpoints)
    }

    /// Quintile bucket `0..=4` for a heading present in the table.
    pub fn quintile(&self, heading: &str) -> Option<usize> {
        let f = *self.freq.get(&normalize_heading(heading))?;
        Some(self.quintile_edges[..4].iter().take_while(|&&e| f > e).count())
    }
}

/// 0 if `freq ≤ p60`, 1 if `≤ p90`, 2 if `≤ p99`, else 3. Unseen (0) is 0.
pub fn stratum_of(freq: u32, breakpoints: [u32; 3]) -> u8 {
    if freq == 0 {
        return 0;
    }
    breakpoints.iter().take_while(|&&b| freq > b).count() as u8
}

pub fn stratify(table: &HeadingFrequencyTable, heading: &str) -> u8 {
    table.stratify(heading)
}

/// One query token with the heading it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryToken {
    pub text: String,
    pub heading: usize,
    pub role: HeadingRole,
}

/// Tokens of every heading, in order, annotated with their heading role.
pub fn annotated_tokens(q: &Query) -> Vec<QueryToken> {
    q.headings
        .iter()
        .enumerate()
        .flat_map(|(i, h)| {
            let role = q.role(i);
            tokenize(h)
                .into_iter()
                .map(move |text| QueryToken { text, heading: i, role })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextualVectors {
    pub position_title: Vec<u8>,
    pub position_inter: Vec<u8>,
    pub position_main: Vec<u8>,
    pub heading_frequency: Vec<u8>,
}

impl ContextualVectors {
    pub fn len(&self) -> usize {
        self.position_title.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position_title.is_empty()
    }

    /// Build from already-annotated tokens (used after truncation).
    pub fn from_tokens(q: &Query, tokens: &[QueryToken], table: &HeadingFrequencyTable) -> Self {
        let flag = |role: HeadingRole| tokens.iter().map(|t| u8::from(t.role == role)).collect();
        Self {
            position_title: flag(HeadingRole::Title),
            position_inter: flag(HeadingRole::Intermediate),
            position_main: flag(HeadingRole::Main),
            heading_frequency: tokens.iter().map(|t| table.stratify(&q.headings[t.heading])).collect(),
        }
    }
}

pub fn contextual_vectors(q: &Query, table: &HeadingFrequencyTable) -> ContextualVectors {
    ContextualVectors::from_tokens(q, &annotated_tokens(q), table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccurrenceStat {
    pub heading: String,
    pub occ: f64,
    pub support: usize,
}

/// Fraction of `rel` paragraphs containing at least one token of `heading`.
pub fn term_occurrence_rate(heading: &str, rel: &[&Paragraph]) -> Result<OccurrenceStat> {
    if rel.is_empty() {
        return Err(Error::Empty("relevant paragraph set"));
    }
    let terms: BTreeSet<String> = tokenize(heading).into_iter().collect();
    let hits = rel
        .iter()
        .filter(|p| tokenize(&p.text).iter().any(|t| terms.contains(t)))
        .count();
    Ok(OccurrenceStat {
        heading: heading.into(),
        occ: hits as f64 / rel.len() as f64,
        support: rel.len(),
    })
}

pub const MIN_BANDWIDTH: f64 = 1e-3;

/// Silverman's rule of thumb, `1.06·σ̂·n^(−1/5)`, floored.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (1.06 * math::sqrt(var) * libm::pow(n, -0.2)).max(MIN_BANDWIDTH)
}

/// Gaussian kernel density estimate evaluated at `grid`.
pub fn kde(values: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(invalid("kernel density estimation needs at least two values"));
    }
    let h = silverman_bandwidth(values);
    let norm = 1.0 / (values.len() as f64 * h * math::sqrt(2.0 * core::f64::consts::PI));
    Ok(grid
        .iter()
        .map(|&x| {
            norm * values
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    math::exp(-0.5 * z * z)
                })
                .sum::<f64>()
        })
        .collect())
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Grid covering the data plus four bandwidths on each side.
pub fn kde_grid(values: &[f64], n: usize) -> Vec<f64> {
    let h = silverman_bandwidth(values);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
    linspace(lo, hi, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBin {
    pub center: f64,
    pub mean_occ: f64,
    pub support: usize,
}

/// Average occurrence rates over frequency bins of width 100, weighted by
/// support. Headings seen in fewer than two articles are skipped.
pub fn binned_occurrence_by_frequency(stats: &[(u32, OccurrenceStat)]) -> Vec<FrequencyBin> {
    let mut bins: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for (freq, s) in stats.iter().filter(|(f, _)| *f >= 2) {
        let e = bins.entry(freq / FREQUENCY_BIN_WIDTH).or_insert((0.0, 0));
        e.0 += s.occ * s.support as f64;
        e.1 += s.support;
    }
    bins.into_iter()
        .filter(|(_, (_, support))| *support > 0)
        .map(|(b, (weighted, support))| FrequencyBin {
            center: f64::from(b * FREQUENCY_BIN_WIDTH) + f64::from(FREQUENCY_BIN_WIDTH) / 2.0,
            mean_occ: weighted / support as f64,
            support,
        })
        .collect()
}

/// Occurrence statistics for one heading instance of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceStat {
    pub qid: String,
    pub role: HeadingRole,
    pub stat: OccurrenceStat,
}

/// Per-instance occurrence rates for every heading of every query with at
/// least one relevant paragraph, together with per-main-heading aggregates
/// (pooled over instances) and their training frequency.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OccurrenceAnalysis {
    pub instances: Vec<InstanceStat>,
    pub main_headings: Vec<(u32, OccurrenceStat)>,
}

impl OccurrenceAnalysis {
    pub fn values(&self, role: HeadingRole) -> Vec<f64> {
        self.instances
            .iter()
            .filter(|s| s.role == role)
            .map(|s| s.stat.occ)
            .collect()
    }

    pub fn mean(&self, role: HeadingRole) -> Option<f64> {
        let v = self.values(role);
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub fn occurrence_analysis<'p>(
    outlines: &[Query],
    relevant: impl Fn(&Query) -> Vec<&'p Paragraph>,
    table: &HeadingFrequencyTable,
) -> OccurrenceAnalysis {
    let mut out = OccurrenceAnalysis::default();
    let mut pooled: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for q in outlines {
        let rel = relevant(q);
        if rel.is_empty() {
            continue;
        }
        for (i, h) in q.headings.iter().enumerate() {
            let role = q.role(i);
            let Ok(stat) = term_occurrence_rate(h, &rel) else {
                continue;
            };
            if role == HeadingRole::Main {
                let e = pooled.entry(normalize_heading(h)).or_insert((0, 0));
                e.0 += libm::round(stat.occ * stat.support as f64) as usize;
                e.1 += stat.support;
            }
            out.instances.push(InstanceStat {
                qid: q.qid.clone(),
                role,
                stat,
            });
        }
    }
    out.main_headings = pooled
        .into_iter()
        .map(|(h, (hits, support))| {
            let freq = table.frequency(&h);
            (
                freq,
                OccurrenceStat {
                    heading: h,
                    occ: hits as f64 / support as f64,
                    support,
                },
            )
        })
        .collect();
    out
}

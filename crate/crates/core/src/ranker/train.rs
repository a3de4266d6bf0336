use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RankerConfig;
use super::features::{Prepared, PreparedQuery, RankContext};
use super::model::{backward, forward, forward_with_cache};
use super::params::RankerParams;
use crate::corpus::{Paragraph, Qrels, Query};
use crate::error::{invalid, Error, Result};
use crate::eval::{mean_r_precision, Run, RELEVANCE_THRESHOLD};
use crate::retrieval::ScoredDoc;

/// Hinge margin of the pairwise loss.
pub const MARGIN: f64 = 1.0;

/// Mean over negatives of `max(0, 1 − (s_pos − s_neg))`.
pub fn pairwise_loss(s_pos: f64, s_negs: &[f64]) -> Result<f64> {
    Ok(pairwise_loss_grad(s_pos, s_negs)?.0)
}

/// Loss with its derivatives with respect to `s_pos` and each `s_neg`.
pub fn pairwise_loss_grad(s_pos: f64, s_negs: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    if s_negs.is_empty() {
        return Err(Error::Empty("negatives"));
    }
    let n = s_negs.len() as f64;
    let mut loss = 0.0;
    let mut d_pos = 0.0;
    let d_negs = s_negs
        .iter()
        .map(|&s| {
            let v = MARGIN - (s_pos - s);
            if v > 0.0 {
                loss += v;
                d_pos -= 1.0 / n;
                1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    Ok((loss / n, d_pos, d_negs))
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: RankerParams,
    v: RankerParams,
    t: i32,
}

impl Adam {
    pub fn new(like: &RankerParams, learning_rate: f64) -> Self {
        let mut m = like.clone();
        m.clear();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            v: m.clone(),
            m,
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut RankerParams, grads: &RankerParams) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.t));
        let (b1, b2) = (self.beta1, self.beta2);
        let iter = params
            .named_mut()
            .into_iter()
            .zip(grads.named())
            .zip(self.m.named_mut().into_iter().zip(self.v.named_mut()));
        for (((_, p), (_, g)), ((_, m), (_, v))) in iter {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
                v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
                let m_hat = m.data[i] / c1;
                let v_hat = v.data[i] / c2;
                p.data[i] -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.eps);
            }
        }
    }
}

/// One positive paragraph of a query with its negatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainSample {
    pub qid: String,
    pub positive: String,
    pub negatives: Vec<String>,
}

/// One sample per relevant paragraph, with negatives taken from the top of
/// the query's candidate list among paragraphs not judged relevant. Queries
/// without candidates or without any non-relevant candidate yield nothing.
pub fn build_train_samples(qrels: &Qrels, candidates: &Run, negatives: usize) -> Vec<TrainSample> {
    let mut out = Vec::new();
    for (qid, ranking) in candidates {
        let Some(judged) = qrels.get(qid) else { continue };
        let is_rel = |pid: &str| judged.get(pid).is_some_and(|&g| g >= RELEVANCE_THRESHOLD);
        let negs: Vec<String> = ranking
            .iter()
            .filter(|d| !is_rel(&d.paragraph_id))
            .take(negatives)
            .map(|d| d.paragraph_id.clone())
            .collect();
        if negs.is_empty() {
            continue;
        }
        for (pid, &g) in judged {
            if g >= RELEVANCE_THRESHOLD {
                out.push(TrainSample {
                    qid: qid.clone(),
                    positive: pid.clone(),
                    negatives: negs.clone(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives: usize,
    /// Candidates reranked per validation query.
    pub depth: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 80,
            learning_rate: 1e-3,
            negatives: 6,
            depth: 100,
        }
    }
}

/// Paragraphs by id.
pub type ParagraphLookup<'a> = BTreeMap<&'a str, &'a Paragraph>;

pub fn paragraph_lookup(paragraphs: &[Paragraph]) -> ParagraphLookup<'_> {
    paragraphs.iter().map(|p| (p.id.as_str(), p)).collect()
}

fn lookup<'a>(paragraphs: &ParagraphLookup<'a>, id: &str) -> Result<&'a Paragraph> {
    paragraphs
        .get(id)
        .copied()
        .ok_or_else(|| invalid(alloc::format!("unknown paragraph `{id}`")))
}

pub struct TrainSet<'a> {
    pub queries: &'a [Query],
    pub samples: &'a [TrainSample],
}

pub struct ValidationSet<'a> {
    pub queries: &'a [Query],
    pub candidates: &'a Run,
    pub qrels: &'a Qrels,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: RankerParams,
    pub epoch_losses: Vec<f64>,
    pub val_rprec: Vec<f64>,
    /// Zero-based epoch whose snapshot was kept.
    pub best_epoch: usize,
}

/// Neural score descending, then the candidate's original score descending,
/// then id.
fn rerank_order(a: &(f64, &ScoredDoc), b: &(f64, &ScoredDoc)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| b.1.score.total_cmp(&a.1.score))
        .then_with(|| a.1.paragraph_id.cmp(&b.1.paragraph_id))
}

fn order_by_scores(candidates: &[ScoredDoc], scores: Vec<f64>) -> Vec<ScoredDoc> {
    let mut pairs: Vec<(f64, &ScoredDoc)> = scores.into_iter().zip(candidates).collect();
    pairs.sort_by(rerank_order);
    pairs
        .into_iter()
        .map(|(s, d)| ScoredDoc::new(d.paragraph_id.clone(), s))
        .collect()
}

/// Reorder candidates by neural score. Output scores are the neural scores.
pub fn rerank(
    q: &Query,
    candidates: &[ScoredDoc],
    paragraphs: &ParagraphLookup<'_>,
    params: &RankerParams,
    cfg: &RankerConfig,
    ctx: &RankContext<'_>,
) -> Result<Vec<ScoredDoc>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let pq = PreparedQuery::new(q, ctx, cfg)?;
    let scores = candidates
        .iter()
        .map(|d| {
            forward(
                &pq.with_document(lookup(paragraphs, &d.paragraph_id)?, ctx, cfg),
                params,
                cfg,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(order_by_scores(candidates, scores))
}

/// Prepared inputs of the validation candidates, kept across epochs.
struct ValidationCache<'a> {
    queries: Vec<(&'a str, Vec<ScoredDoc>, Vec<Prepared>)>,
}

impl<'a> ValidationCache<'a> {
    fn new(
        valid: &ValidationSet<'a>,
        paragraphs: &ParagraphLookup<'_>,
        ctx: &RankContext<'_>,
        cfg: &RankerConfig,
        depth: usize,
    ) -> Result<Self> {
        let mut queries = Vec::new();
        for q in valid.queries {
            let Some(ranking) = valid.candidates.get(&q.qid) else {
                continue;
            };
            let cands: Vec<ScoredDoc> = ranking.iter().take(depth).cloned().collect();
            let pq = PreparedQuery::new(q, ctx, cfg)?;
            let prepared = cands
                .iter()
                .map(|d| Ok(pq.with_document(lookup(paragraphs, &d.paragraph_id)?, ctx, cfg)))
                .collect::<Result<Vec<_>>>()?;
            queries.push((q.qid.as_str(), cands, prepared));
        }
        Ok(Self { queries })
    }

    fn r_precision(&self, params: &RankerParams, cfg: &RankerConfig, qrels: &Qrels) -> Result<f64> {
        let mut run = Run::new();
        for (qid, cands, prepared) in &self.queries {
            let scores = prepared
                .iter()
                .map(|p| forward(p, params, cfg))
                .collect::<Result<Vec<_>>>()?;
            run.insert(String::from(*qid), order_by_scores(cands, scores));
        }
        Ok(mean_r_precision(&run, qrels))
    }
}

/// Train from seeded initial parameters with per-sample Adam updates on the
/// pairwise loss. After each epoch the validation candidates are reranked
/// and the snapshot with the best R-Prec is kept (earliest on ties).
pub fn train(
    train: &TrainSet<'_>,
    valid: &ValidationSet<'_>,
    paragraphs: &ParagraphLookup<'_>,
    ctx: &RankContext<'_>,
    cfg: &RankerConfig,
    tcfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if train.samples.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    if tcfg.epochs == 0 {
        return Err(invalid("epochs must be positive"));
    }
    let has_judgments = valid.queries.iter().any(|q| {
        valid.candidates.contains_key(&q.qid)
            && valid
                .qrels
                .get(&q.qid)
                .is_some_and(|j| j.values().any(|&g| g >= RELEVANCE_THRESHOLD))
    });
    if !has_judgments {
        return Err(invalid("validation queries have no relevant judgments"));
    }

    // Inputs are cached per (query, paragraph): negatives repeat across the
    // positives of a query.
    let by_qid: BTreeMap<&str, &Query> = train.queries.iter().map(|q| (q.qid.as_str(), q)).collect();
    let mut query_cache: BTreeMap<&str, PreparedQuery> = BTreeMap::new();
    let mut inputs: BTreeMap<(&str, &str), Prepared> = BTreeMap::new();
    for s in train.samples {
        if s.negatives.is_empty() {
            return Err(Error::Empty("negatives"));
        }
        let q = by_qid
            .get(s.qid.as_str())
            .ok_or_else(|| invalid(alloc::format!("unknown query `{}`", s.qid)))?;
        if !query_cache.contains_key(s.qid.as_str()) {
            query_cache.insert(&s.qid, PreparedQuery::new(q, ctx, cfg)?);
        }
        let pq = &query_cache[s.qid.as_str()];
        for pid in core::iter::once(&s.positive).chain(&s.negatives) {
            if !inputs.contains_key(&(s.qid.as_str(), pid.as_str())) {
                let p = lookup(paragraphs, pid)?;
                inputs.insert((&s.qid, pid), pq.with_document(p, ctx, cfg));
            }
        }
    }
    drop(query_cache);
    let validation = ValidationCache::new(valid, paragraphs, ctx, cfg, tcfg.depth)?;

    let mut params = RankerParams::init(cfg)?;
    let mut adam = Adam::new(&params, tcfg.learning_rate);
    let mut grads = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.samples.len()).collect();
    let mut best: Option<(f64, usize, RankerParams)> = None;
    let mut epoch_losses = Vec::with_capacity(tcfg.epochs);
    let mut val_rprec = Vec::with_capacity(tcfg.epochs);

    for epoch in 0..tcfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let s = &train.samples[i];
            let pos = &inputs[&(s.qid.as_str(), s.positive.as_str())];
            let negs: Vec<&Prepared> = s
                .negatives
                .iter()
                .map(|n| &inputs[&(s.qid.as_str(), n.as_str())])
                .collect();
            let pos_cache = forward_with_cache(pos, &params, cfg)?;
            let neg_caches = negs
                .iter()
                .map(|n| forward_with_cache(n, &params, cfg))
                .collect::<Result<Vec<_>>>()?;
            let neg_scores: Vec<f64> = neg_caches.iter().map(|c| c.score).collect();
            let (loss, d_pos, d_negs) = pairwise_loss_grad(pos_cache.score, &neg_scores)?;
            total += loss;
            if loss == 0.0 {
                continue;
            }
            grads.clear();
            backward(&pos_cache, pos, &params, cfg, d_pos, &mut grads);
            for ((c, n), d) in neg_caches.iter().zip(&negs).zip(&d_negs) {
                if *d != 0.0 {
                    backward(c, n, &params, cfg, *d, &mut grads);
                }
            }
            adam.step(&mut params, &grads);
        }
        epoch_losses.push(total / order.len() as f64);
        let rp = validation.r_precision(&params, cfg, valid.qrels)?;
        val_rprec.push(rp);
        if best.as_ref().is_none_or(|(b, _, _)| rp > *b) {
            best = Some((rp, epoch, params.clone()));
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    if !params.is_finite() {
        return Err(invalid("training diverged to non-finite parameters"));
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
        val_rprec,
        best_epoch,
    })
}

/// Gradient of the pairwise loss for one sample, for checking and tooling.
pub fn sample_loss_grad(
    pos: &Prepared,
    negs: &[Prepared],
    params: &RankerParams,
    cfg: &RankerConfig,
) -> Result<(f64, RankerParams)> {
    let pos_cache = forward_with_cache(pos, params, cfg)?;
    let caches = negs
        .iter()
        .map(|n| forward_with_cache(n, params, cfg))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = caches.iter().map(|c| c.score).collect();
    let (loss, d_pos, d_negs) = pairwise_loss_grad(pos_cache.score, &scores)?;
    let mut grads = params.clone();
    grads.clear();
    backward(&pos_cache, pos, params, cfg, d_pos, &mut grads);
    for ((c, n), d) in caches.iter().zip(negs).zip(d_negs) {
        backward(c, n, params, cfg, d, &mut grads);
    }
    Ok((loss, grads))
}

/// Smallest distance of a sample to a non-differentiable point of its loss:
/// ReLU, max and k-max kinks in every forward pass plus the hinge itself.
pub fn sample_kink_gap(pos: &Prepared, negs: &[Prepared], params: &RankerParams, cfg: &RankerConfig) -> Result<f64> {
    let pos_cache = forward_with_cache(pos, params, cfg)?;
    let mut gap = pos_cache.min_kink_gap();
    for n in negs {
        let c = forward_with_cache(n, params, cfg)?;
        gap = gap
            .min(c.min_kink_gap())
            .min(libm::fabs(MARGIN - (pos_cache.score - c.score)));
    }
    Ok(gap)
}

/// Per-query sample counts, handy for logging.
pub fn samples_per_query(samples: &[TrainSample]) -> BTreeMap<&str, usize> {
    let mut out = BTreeMap::new();
    for s in samples {
        *out.entry(s.qid.as_str()).or_insert(0) += 1;
    }
    out
}

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{KnowledgeGraph, MentionSource};
use crate::corpus::Paragraph;
use crate::error::{invalid, Error, Result};
use crate::math;

/// `out[k] = Σ_i a[i]·b[(i+k) mod d]`.
pub fn circular_correlation(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut out = vec![0.0; a.len()];
    correlate_into(a, b, &mut out);
    Ok(out)
}

fn correlate_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    let d = a.len();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..d {
            let j = i + k;
            acc += a[i] * b[if j >= d { j - d } else { j }];
        }
        *o = acc;
    }
}

/// `out[j] = Σ_k a[k]·b[(j−k) mod d]`.
fn convolve_into(a: &[f64], b: &[f64], out: &mut [f64]) {
    let d = a.len();
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..d {
            acc += a[k] * b[(j + d - k) % d];
        }
        *o = acc;
    }
}

/// Raw HolE score `r · (s ⋆ o)`.
pub fn hole_raw(s: &[f64], r: &[f64], o: &[f64]) -> f64 {
    let mut tmp = vec![0.0; s.len()];
    correlate_into(s, o, &mut tmp);
    math::dot(r, &tmp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleConfig {
    pub dim: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Required raw-score gap; 0 gives the plain pairwise logistic loss.
    pub margin: f64,
    pub negatives: usize,
    pub seed: u64,
}

impl Default for HoleConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            iterations: 5000,
            learning_rate: 0.05,
            margin: 0.0,
            negatives: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoleEmbeddings {
    dim: usize,
    entities: BTreeMap<String, Vec<f64>>,
    relations: BTreeMap<String, Vec<f64>>,
}

impl HoleEmbeddings {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("embedding dimension must be positive"));
        }
        Ok(Self {
            dim,
            entities: BTreeMap::new(),
            relations: BTreeMap::new(),
        })
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite embedding component"));
        }
        Ok(())
    }

    pub fn insert_entity(&mut self, name: impl Into<String>, v: Vec<f64>) -> Result<()> {
        self.check(&v)?;
        self.entities.insert(name.into(), v);
        Ok(())
    }

    pub fn insert_relation(&mut self, name: impl Into<String>, v: Vec<f64>) -> Result<()> {
        self.check(&v)?;
        self.relations.insert(name.into(), v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entity(&self, name: &str) -> Option<&[f64]> {
        self.entities.get(name).map(Vec::as_slice)
    }

    pub fn relation(&self, name: &str) -> Option<&[f64]> {
        self.relations.get(name).map(Vec::as_slice)
    }

    pub fn entities(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entities.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// `σ(r · (e_s ⋆ e_o))`.
    pub fn score(&self, subject: &str, relation: &str, object: &str) -> Result<f64> {
        let unknown = |what: &str, name: &str| invalid(alloc::format!("unknown {what} `{name}`"));
        let s = self.entity(subject).ok_or_else(|| unknown("entity", subject))?;
        let o = self.entity(object).ok_or_else(|| unknown("entity", object))?;
        let r = self.relation(relation).ok_or_else(|| unknown("relation", relation))?;
        Ok(math::sigmoid(hole_raw(s, r, o)))
    }
}

pub fn hole_score(emb: &HoleEmbeddings, subject: &str, relation: &str, object: &str) -> Result<f64> {
    emb.score(subject, relation, object)
}

/// Top-`n` HolE scores of the paragraph's mentions against the topic and
/// heading label, descending and zero-padded. Mentions missing from the
/// embeddings are skipped; an unknown topic or label yields all zeros.
pub fn entity_scores(
    emb: &HoleEmbeddings,
    topic: &str,
    label: &str,
    paragraph: &Paragraph,
    source: &dyn MentionSource,
    n: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let (Some(s), Some(r)) = (emb.entity(topic), emb.relation(label)) else {
        return out;
    };
    let mut scores: Vec<f64> = source
        .mentions(paragraph)
        .iter()
        .filter_map(|m| emb.entity(m))
        .map(|o| math::sigmoid(hole_raw(s, r, o)))
        .collect();
    scores.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    for (slot, v) in out.iter_mut().zip(scores) {
        *slot = v;
    }
    out
}

/// Dense parameter store used during training: entity and relation vectors
/// laid out row-major by index.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleParams {
    pub dim: usize,
    pub entities: Vec<f64>,
    pub relations: Vec<f64>,
}

/// A triple of indices into [`HoleParams`].
pub type IndexedTriple = (usize, usize, usize);

impl HoleParams {
    pub fn zeros(dim: usize, n_entities: usize, n_relations: usize) -> Self {
        Self {
            dim,
            entities: vec![0.0; dim * n_entities],
            relations: vec![0.0; dim * n_relations],
        }
    }

    fn entity(&self, i: usize) -> &[f64] {
        &self.entities[i * self.dim..(i + 1) * self.dim]
    }

    fn relation(&self, i: usize) -> &[f64] {
        &self.relations[i * self.dim..(i + 1) * self.dim]
    }

    pub fn raw(&self, (s, r, o): IndexedTriple) -> f64 {
        hole_raw(self.entity(s), self.relation(r), self.entity(o))
    }

    /// Add `scale · ∂η/∂θ` of triple `t` into `grad`.
    fn accumulate_raw_grad(&self, t: IndexedTriple, scale: f64, grad: &mut HoleParams, scratch: &mut [f64]) {
        let (s, r, o) = t;
        let d = self.dim;
        // ∂η/∂r = s ⋆ o
        correlate_into(self.entity(s), self.entity(o), scratch);
        for (g, v) in grad.relations[r * d..(r + 1) * d].iter_mut().zip(scratch.iter()) {
            *g += scale * v;
        }
        // ∂η/∂s = r ⋆ o
        correlate_into(self.relation(r), self.entity(o), scratch);
        for (g, v) in grad.entities[s * d..(s + 1) * d].iter_mut().zip(scratch.iter()) {
            *g += scale * v;
        }
        // ∂η/∂o = r ∗ s
        convolve_into(self.relation(r), self.entity(s), scratch);
        for (g, v) in grad.entities[o * d..(o + 1) * d].iter_mut().zip(scratch.iter()) {
            *g += scale * v;
        }
    }
}

/// `ln(1 + exp(−(η_pos − η_neg − margin)))`.
pub fn pair_loss(params: &HoleParams, pos: IndexedTriple, neg: IndexedTriple, margin: f64) -> f64 {
    math::softplus(-(params.raw(pos) - params.raw(neg) - margin))
}

/// Loss and its gradient with respect to every parameter.
pub fn pair_loss_grad(params: &HoleParams, pos: IndexedTriple, neg: IndexedTriple, margin: f64) -> (f64, HoleParams) {
    let mut grad = HoleParams::zeros(
        params.dim,
        params.entities.len() / params.dim,
        params.relations.len() / params.dim,
    );
    let mut scratch = vec![0.0; params.dim];
    let loss = accumulate_pair(params, pos, neg, margin, &mut grad, &mut scratch);
    (loss, grad)
}

fn accumulate_pair(
    params: &HoleParams,
    pos: IndexedTriple,
    neg: IndexedTriple,
    margin: f64,
    grad: &mut HoleParams,
    scratch: &mut [f64],
) -> f64 {
    let gap = params.raw(pos) - params.raw(neg) - margin;
    // d/dgap softplus(−gap) = −σ(−gap)
    let w = -math::sigmoid(-gap);
    params.accumulate_raw_grad(pos, w, grad, scratch);
    params.accumulate_raw_grad(neg, -w, grad, scratch);
    math::softplus(-gap)
}

/// Result of [`train_hole`]: the selected embeddings plus the per-epoch
/// mean training loss.
#[derive(Debug, Clone)]
pub struct HoleTraining {
    pub embeddings: HoleEmbeddings,
    pub epoch_losses: Vec<f64>,
    pub best_epoch: usize,
}

/// Train HolE embeddings with SGD on the pairwise logistic ranking loss.
/// Each epoch visits every triple once in shuffled order and pairs it with
/// `negatives` corruptions of its subject or object. The snapshot of the
/// epoch with the lowest mean loss is returned.
pub fn train_hole(graph: &KnowledgeGraph, cfg: &HoleConfig) -> Result<HoleTraining> {
    if graph.is_empty() {
        return Err(Error::Empty("knowledge graph"));
    }
    if cfg.dim == 0 {
        return Err(invalid("embedding dimension must be positive"));
    }
    if cfg.iterations == 0 || cfg.negatives == 0 {
        return Err(invalid("iterations and negatives must be positive"));
    }
    let entities: Vec<&str> = graph.entities().collect();
    let relations: Vec<&str> = graph.relations().collect();
    let ent_ix: BTreeMap<&str, usize> = entities.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let rel_ix: BTreeMap<&str, usize> = relations.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    let triples: Vec<IndexedTriple> = graph
        .triples()
        .map(|t| {
            (
                ent_ix[t.subject.as_str()],
                rel_ix[t.relation.as_str()],
                ent_ix[t.object.as_str()],
            )
        })
        .collect();
    let known: BTreeSet<IndexedTriple> = triples.iter().copied().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = cfg.dim;
    let bound = 0.5 / d as f64;
    let mut params = HoleParams::zeros(d, entities.len(), relations.len());
    for v in params.entities.iter_mut().chain(params.relations.iter_mut()) {
        *v = rng.gen_range(-bound..=bound);
    }

    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut grad = HoleParams::zeros(d, entities.len(), relations.len());
    let mut scratch = vec![0.0; d];
    let mut epoch_losses = Vec::with_capacity(cfg.iterations);
    let mut best = (f64::INFINITY, 0usize, params.clone());
    for epoch in 0..cfg.iterations {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut count = 0usize;
        for &ti in &order {
            let pos = triples[ti];
            for _ in 0..cfg.negatives {
                let neg = corrupt(pos, entities.len(), &known, &mut rng);
                // Shared rows are applied once and zeroed, so the gradient
                // buffer is clean for the next pair.
                total += accumulate_pair(&params, pos, neg, cfg.margin, &mut grad, &mut scratch);
                count += 1;
                for t in [pos, neg] {
                    apply_rows(&mut params, &mut grad, t, d, cfg.learning_rate);
                }
            }
        }
        let mean = total / count as f64;
        epoch_losses.push(mean);
        if mean < best.0 {
            best = (mean, epoch, params.clone());
        }
    }

    let (_, best_epoch, chosen) = best;
    let mut embeddings = HoleEmbeddings::new(d)?;
    for (i, e) in entities.iter().enumerate() {
        embeddings.insert_entity(*e, chosen.entity(i).to_vec())?;
    }
    for (i, r) in relations.iter().enumerate() {
        embeddings.insert_relation(*r, chosen.relation(i).to_vec())?;
    }
    Ok(HoleTraining {
        embeddings,
        epoch_losses,
        best_epoch,
    })
}

/// Replace the subject or the object (fair coin) with a uniformly drawn
/// entity, retrying a few times to avoid known positives.
fn corrupt(
    t: IndexedTriple,
    n_entities: usize,
    known: &BTreeSet<IndexedTriple>,
    rng: &mut ChaCha8Rng,
) -> IndexedTriple {
    let mut candidate = t;
    for _ in 0..10 {
        let e = rng.gen_range(0..n_entities);
        candidate = if rng.gen_bool(0.5) {
            (e, t.1, t.2)
        } else {
            (t.0, t.1, e)
        };
        if !known.contains(&candidate) {
            break;
        }
    }
    candidate
}

fn apply_rows(params: &mut HoleParams, grad: &mut HoleParams, (s, r, o): IndexedTriple, d: usize, lr: f64) {
    for e in [s, o] {
        for (p, g) in params.entities[e * d..(e + 1) * d]
            .iter_mut()
            .zip(&mut grad.entities[e * d..(e + 1) * d])
        {
            *p -= lr * *g;
            *g = 0.0;
        }
    }
    for (p, g) in params.relations[r * d..(r + 1) * d]
        .iter_mut()
        .zip(&mut grad.relations[r * d..(r + 1) * d])
    {
        *p -= lr * *g;
        *g = 0.0;
    }
}

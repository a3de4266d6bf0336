use alloc::vec;
use alloc::vec::Vec;

use super::config::RankerConfig;
use super::features::{prepare, Prepared, RankContext, SimilarityMatrix};
use super::params::{ConvBank, Dense, RankerParams};
use crate::corpus::{Paragraph, Query};
use crate::error::{Error, Result};
use crate::facets::ContextualVectors;

/// Channel maps of one filter bank after the max over filters.
#[derive(Debug, Clone)]
struct ConvChannel {
    values: Vec<f64>,
    /// Winning filter per position.
    filter: Vec<usize>,
    /// Winner minus runner-up per position.
    gap: Vec<f64>,
    /// Columns `>= computed` only see padding.
    computed: usize,
}

/// 2-D convolution with same padding and stride 1, followed by the max over
/// the bank's filters. Kernel offset is `(size − 1) / 2`, so even sizes pad
/// one more cell after than before.
fn convolve_max(m: &SimilarityMatrix, bank: &ConvBank) -> ConvChannel {
    let (rows, cols, s) = (m.rows, m.cols, bank.size);
    let n_f = bank.bias.len();
    let pad = (s - 1) / 2;
    let used = (0..cols)
        .rev()
        .find(|&j| (0..rows).any(|i| m.get(i, j) != 0.0))
        .map_or(0, |j| j + 1);
    let computed = (used + pad).min(cols);

    let mut best = vec![f64::NEG_INFINITY; rows * cols];
    let mut second = vec![f64::NEG_INFINITY; rows * cols];
    let mut filter = vec![0usize; rows * cols];
    for f in 0..n_f {
        let w = &bank.weight.data[f * s * s..(f + 1) * s * s];
        let b = bank.bias.data[f];
        for i in 0..rows {
            for j in 0..cols {
                let v = if j < computed {
                    let mut acc = b;
                    for a in 0..s {
                        let Some(ii) = (i + a).checked_sub(pad).filter(|&ii| ii < rows) else {
                            continue;
                        };
                        let row = m.row(ii);
                        for c in 0..s {
                            if let Some(jj) = (j + c).checked_sub(pad).filter(|&jj| jj < cols) {
                                acc += w[a * s + c] * row[jj];
                            }
                        }
                    }
                    acc
                } else {
                    b
                };
                let idx = i * cols + j;
                if v > best[idx] {
                    second[idx] = best[idx];
                    best[idx] = v;
                    filter[idx] = f;
                } else if v > second[idx] {
                    second[idx] = v;
                }
            }
        }
    }
    let gap = best.iter().zip(&second).map(|(b, s)| b - s).collect();
    ConvChannel {
        values: best,
        filter,
        gap,
        computed,
    }
}

/// Positions of the `k` largest values, largest first; earlier positions win
/// ties. Also returns the largest value left out, if any.
fn kmax_positions(row: &[f64], k: usize) -> (Vec<usize>, Option<f64>) {
    let mut top: Vec<usize> = Vec::with_capacity(k + 1);
    for (j, &v) in row.iter().enumerate() {
        let at = top.iter().position(|&t| v > row[t]).unwrap_or(top.len());
        if at <= k {
            top.insert(at, j);
            top.truncate(k + 1);
        }
    }
    let rest = (top.len() > k).then(|| row[top[k]]);
    top.truncate(k);
    (top, rest)
}

/// k-max pooling of one row: the `k` largest values, descending.
pub fn kmax_pool(row: &[f64], k: usize) -> Vec<f64> {
    kmax_positions(row, k).0.into_iter().map(|j| row[j]).collect()
}

#[derive(Debug, Clone)]
struct SegmentCache {
    convs: Vec<ConvChannel>,
    /// `rows × channels × k` chosen document positions.
    positions: Vec<usize>,
    /// `rows × row_width`
    features: Vec<f64>,
    /// Segment dense layer pre-activation and output (heading independence).
    dense_pre: Vec<f64>,
    dense_out: Vec<f64>,
    kink: f64,
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    segments: Vec<SegmentCache>,
    combined: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden_out: Vec<f64>,
    pub score: f64,
}

impl ForwardCache {
    /// Flat per-token features of all segments followed by the KG scores.
    pub fn features(&self, prepared: &Prepared) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().flat_map(|s| s.features.iter().copied()).collect();
        out.extend_from_slice(&prepared.kg);
        out
    }

    /// Input to the combination layer.
    pub fn combined(&self) -> &[f64] {
        &self.combined
    }

    /// Distance of this evaluation to the nearest point where the score is
    /// not differentiable (ReLU at 0, tied filter maxima, tied k-max
    /// selections in parametrised channels).
    pub fn min_kink_gap(&self) -> f64 {
        let relu = self
            .hidden_pre
            .iter()
            .chain(self.segments.iter().flat_map(|s| s.dense_pre.iter()))
            .map(|z| z.abs())
            .fold(f64::INFINITY, f64::min);
        self.segments.iter().map(|s| s.kink).fold(relu, f64::min)
    }
}

fn dense_forward(layer: &Dense, x: &[f64]) -> Vec<f64> {
    let n_in = layer.inputs();
    layer
        .bias
        .data
        .iter()
        .enumerate()
        .map(|(o, b)| b + crate::math::dot(&layer.weight.data[o * n_in..(o + 1) * n_in], x))
        .collect()
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| v.max(0.0)).collect()
}

/// Accumulate weight/bias gradients of a dense layer and return the
/// gradient with respect to its input.
fn dense_backward(layer: &Dense, grad: &mut Dense, x: &[f64], dz: &[f64]) -> Vec<f64> {
    let n_in = layer.inputs();
    let mut dx = vec![0.0; n_in];
    for (o, &g) in dz.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grad.bias.data[o] += g;
        let w = &layer.weight.data[o * n_in..(o + 1) * n_in];
        let gw = &mut grad.weight.data[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            gw[i] += g * x[i];
            dx[i] += g * w[i];
        }
    }
    dx
}

fn check_banks(banks: &[ConvBank], cfg: &RankerConfig) -> Result<()> {
    if banks.len() != cfg.filter_sizes.len() {
        return Err(Error::Shape(alloc::format!(
            "{} filter banks for {} sizes",
            banks.len(),
            cfg.filter_sizes.len()
        )));
    }
    for (b, &s) in banks.iter().zip(&cfg.filter_sizes) {
        if b.size != s || b.weight.shape != [cfg.filters_per_size, s, s] || b.bias.len() != cfg.filters_per_size {
            return Err(Error::Shape(alloc::format!(
                "filter bank of size {} has the wrong shape",
                b.size
            )));
        }
    }
    Ok(())
}

/// Match a similarity matrix against the filter banks: identity channel
/// first, then one channel per bank, each k-max pooled per query row.
/// Returns `rows × (channels · k)` values.
pub fn match_and_pool(m: &SimilarityMatrix, banks: &[ConvBank], cfg: &RankerConfig) -> Result<Vec<Vec<f64>>> {
    check_banks(banks, cfg)?;
    let (pooled, _, _, _) = pool_segment(m, banks, cfg.kmax);
    Ok(pooled)
}

fn positive_min(acc: f64, gap: f64) -> f64 {
    if gap > 0.0 {
        acc.min(gap)
    } else {
        acc
    }
}

type Pooled = (Vec<Vec<f64>>, Vec<ConvChannel>, Vec<usize>, f64);

fn pool_segment(m: &SimilarityMatrix, banks: &[ConvBank], k: usize) -> Pooled {
    let convs: Vec<ConvChannel> = banks.iter().map(|b| convolve_max(m, b)).collect();
    let channels = convs.len() + 1;
    let mut positions = Vec::with_capacity(m.rows * channels * k);
    let mut pooled = Vec::with_capacity(m.rows);
    let mut kink = f64::INFINITY;
    for i in 0..m.rows {
        let mut row_out = Vec::with_capacity(channels * k);
        for c in 0..channels {
            let row = if c == 0 {
                m.row(i)
            } else {
                &convs[c - 1].values[i * m.cols..(i + 1) * m.cols]
            };
            let (pos, rest) = kmax_positions(row, k);
            if c > 0 {
                let conv = &convs[c - 1];
                // Exact ties come from identical windows, where either choice
                // yields the same gradient; only near-ties are kinks.
                for &j in &pos {
                    kink = positive_min(kink, conv.gap[i * m.cols + j]);
                }
                // The pooled values feed fixed slots, so a swap inside the
                // top k bends the loss just like one across its edge.
                for w in pos.windows(2) {
                    kink = positive_min(kink, row[w[0]] - row[w[1]]);
                }
                if let (Some(r), Some(&last)) = (rest, pos.last()) {
                    kink = positive_min(kink, row[last] - r);
                }
            }
            row_out.extend(pos.iter().map(|&j| row[j]));
            positions.extend_from_slice(&pos);
        }
        pooled.push(row_out);
    }
    (pooled, convs, positions, kink)
}

/// Concatenate pooled rows with IDF, contextual vectors (as enabled by the
/// variant) and, once at the end, the KG scores.
pub fn assemble_features(
    pooled: &[Vec<f64>],
    idf: &[f64],
    contextual: Option<&ContextualVectors>,
    kg_scores: &[f64],
    cfg: &RankerConfig,
) -> Result<Vec<f64>> {
    let rows = pooled.len();
    let pooled_width = cfg.channels() * cfg.kmax;
    if let Some(bad) = pooled.iter().find(|r| r.len() != pooled_width) {
        return Err(Error::LengthMismatch {
            expected: pooled_width,
            got: bad.len(),
        });
    }
    if idf.len() != rows {
        return Err(Error::LengthMismatch {
            expected: rows,
            got: idf.len(),
        });
    }
    let v = cfg.variant;
    let needs_cv = v.use_position_vectors || v.use_frequency_vector;
    let cv = match (needs_cv, contextual) {
        (true, Some(cv)) if cv.len() == rows => Some(cv),
        (true, Some(cv)) => {
            return Err(Error::LengthMismatch {
                expected: rows,
                got: cv.len(),
            })
        }
        (true, None) => return Err(crate::error::invalid("contextual vectors required by the variant")),
        (false, _) => None,
    };
    if kg_scores.len() != cfg.kg_width() {
        return Err(Error::LengthMismatch {
            expected: cfg.kg_width(),
            got: kg_scores.len(),
        });
    }
    let mut out = Vec::with_capacity(rows * cfg.row_width() + kg_scores.len());
    for i in 0..rows {
        out.extend_from_slice(&pooled[i]);
        out.push(idf[i]);
        if let Some(cv) = cv {
            if v.use_position_vectors {
                out.extend([cv.position_title[i], cv.position_inter[i], cv.position_main[i]].map(f64::from));
            }
            if v.use_frequency_vector {
                out.push(f64::from(cv.heading_frequency[i]));
            }
        }
    }
    out.extend_from_slice(kg_scores);
    Ok(out)
}

fn check_prepared(prepared: &Prepared, params: &RankerParams, cfg: &RankerConfig) -> Result<()> {
    let rows = cfg.segment_rows();
    let extra = 1 + cfg.variant.contextual_width();
    if prepared.segments.len() != rows.len() || params.matchers.len() != rows.len() {
        return Err(Error::Shape("segment count does not match the variant".into()));
    }
    for (s, &r) in prepared.segments.iter().zip(&rows) {
        if s.sim.rows != r || s.sim.cols != cfg.max_doc_len || s.extras.len() != r * extra {
            return Err(Error::Shape("prepared segment has the wrong shape".into()));
        }
    }
    if prepared.kg.len() != cfg.kg_width() {
        return Err(Error::LengthMismatch {
            expected: cfg.kg_width(),
            got: prepared.kg.len(),
        });
    }
    for banks in &params.matchers {
        check_banks(banks, cfg)?;
    }
    if params.hidden.inputs() != cfg.combination_input() || params.hidden.outputs() != cfg.hidden {
        return Err(Error::Shape("combination layer does not match the variant".into()));
    }
    Ok(())
}

/// Score one prepared pair, keeping what backpropagation needs.
pub fn forward_with_cache(prepared: &Prepared, params: &RankerParams, cfg: &RankerConfig) -> Result<ForwardCache> {
    check_prepared(prepared, params, cfg)?;
    let width = cfg.row_width();
    let extra = 1 + cfg.variant.contextual_width();
    let mut segments = Vec::with_capacity(prepared.segments.len());
    let mut combined = Vec::with_capacity(cfg.combination_input());
    for (m, seg) in prepared.segments.iter().enumerate() {
        let (pooled, convs, positions, kink) = pool_segment(&seg.sim, &params.matchers[m], cfg.kmax);
        let mut features = Vec::with_capacity(seg.sim.rows * width);
        for (i, row) in pooled.iter().enumerate() {
            features.extend_from_slice(row);
            features.extend_from_slice(&seg.extras[i * extra..(i + 1) * extra]);
        }
        let (dense_pre, dense_out) = if cfg.variant.heading_independence {
            let z = dense_forward(&params.segments[m], &features);
            let h = relu(&z);
            combined.extend_from_slice(&h);
            (z, h)
        } else {
            combined.extend_from_slice(&features);
            (Vec::new(), Vec::new())
        };
        segments.push(SegmentCache {
            convs,
            positions,
            features,
            dense_pre,
            dense_out,
            kink,
        });
    }
    combined.extend_from_slice(&prepared.kg);
    let hidden_pre = dense_forward(&params.hidden, &combined);
    let hidden_out = relu(&hidden_pre);
    let score = dense_forward(&params.output, &hidden_out)[0];
    Ok(ForwardCache {
        segments,
        combined,
        hidden_pre,
        hidden_out,
        score,
    })
}

pub fn forward(prepared: &Prepared, params: &RankerParams, cfg: &RankerConfig) -> Result<f64> {
    Ok(forward_with_cache(prepared, params, cfg)?.score)
}

/// Prepare and score a query–paragraph pair.
pub fn score_pair(
    q: &Query,
    p: &Paragraph,
    params: &RankerParams,
    cfg: &RankerConfig,
    ctx: &RankContext<'_>,
) -> Result<f64> {
    forward(&prepare(q, p, ctx, cfg)?, params, cfg)
}

/// Add `d_score · ∂score/∂θ` into `grads`.
pub fn backward(
    cache: &ForwardCache,
    prepared: &Prepared,
    params: &RankerParams,
    cfg: &RankerConfig,
    d_score: f64,
    grads: &mut RankerParams,
) {
    let d_hidden_out = dense_backward(&params.output, &mut grads.output, &cache.hidden_out, &[d_score]);
    let d_hidden_pre: Vec<f64> = d_hidden_out
        .iter()
        .zip(&cache.hidden_pre)
        .map(|(g, &z)| if z > 0.0 { *g } else { 0.0 })
        .collect();
    let d_combined = dense_backward(&params.hidden, &mut grads.hidden, &cache.combined, &d_hidden_pre);

    let width = cfg.row_width();
    let k = cfg.kmax;
    let channels = cfg.channels();
    let mut offset = 0;
    for (m, (seg, input)) in cache.segments.iter().zip(&prepared.segments).enumerate() {
        let d_features = if cfg.variant.heading_independence {
            let h = cfg.hidden;
            let d_pre: Vec<f64> = d_combined[offset..offset + h]
                .iter()
                .zip(&seg.dense_pre)
                .map(|(g, &z)| if z > 0.0 { *g } else { 0.0 })
                .collect();
            offset += h;
            debug_assert_eq!(seg.dense_out.len(), h);
            dense_backward(&params.segments[m], &mut grads.segments[m], &seg.features, &d_pre)
        } else {
            let n = seg.features.len();
            offset += n;
            d_combined[offset - n..offset].to_vec()
        };

        let sim = &input.sim;
        for i in 0..sim.rows {
            for c in 1..channels {
                let bank = &cfg.filter_sizes[c - 1];
                let conv = &seg.convs[c - 1];
                let s = *bank;
                let pad = (s - 1) / 2;
                for r in 0..k {
                    let g = d_features[i * width + c * k + r];
                    if g == 0.0 {
                        continue;
                    }
                    let j = seg.positions[(i * channels + c) * k + r];
                    let f = conv.filter[i * sim.cols + j];
                    let gb = &mut grads.matchers[m][c - 1];
                    gb.bias.data[f] += g;
                    if j >= conv.computed {
                        continue;
                    }
                    let gw = &mut gb.weight.data[f * s * s..(f + 1) * s * s];
                    for a in 0..s {
                        let Some(ii) = (i + a).checked_sub(pad).filter(|&ii| ii < sim.rows) else {
                            continue;
                        };
                        for cc in 0..s {
                            if let Some(jj) = (j + cc).checked_sub(pad).filter(|&jj| jj < sim.cols) {
                                gw[a * s + cc] += g * sim.get(ii, jj);
                            }
                        }
                    }
                }
            }
        }
    }
}

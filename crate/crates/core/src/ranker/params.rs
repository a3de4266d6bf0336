use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RankerConfig;
use crate::error::{Error, Result};

/// A named parameter array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// `n_f` square filters of one size.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBank {
    pub size: usize,
    /// `[n_f, size, size]`
    pub weight: Tensor,
    /// `[n_f]`
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[out, in]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[outputs, inputs]),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape[0]
    }
}

/// All trainable tensors of the matcher. Gradients share this type.
#[derive(Debug, Clone, PartialEq)]
pub struct RankerParams {
    /// One filter set per matching segment.
    pub matchers: Vec<Vec<ConvBank>>,
    /// Per-segment dense layers (heading independence only).
    pub segments: Vec<Dense>,
    pub hidden: Dense,
    pub output: Dense,
}

impl RankerParams {
    pub fn zeros(cfg: &RankerConfig) -> Self {
        let segment_rows = cfg.segment_rows();
        let matchers = segment_rows
            .iter()
            .map(|_| {
                cfg.filter_sizes
                    .iter()
                    .map(|&s| ConvBank {
                        size: s,
                        weight: Tensor::zeros(&[cfg.filters_per_size, s, s]),
                        bias: Tensor::zeros(&[cfg.filters_per_size]),
                    })
                    .collect()
            })
            .collect();
        let segments = if cfg.variant.heading_independence {
            segment_rows
                .iter()
                .map(|&rows| Dense::zeros(rows * cfg.row_width(), cfg.hidden))
                .collect()
        } else {
            Vec::new()
        };
        Self {
            matchers,
            segments,
            hidden: Dense::zeros(cfg.combination_input(), cfg.hidden),
            output: Dense::zeros(cfg.hidden, 1),
        }
    }

    /// Weights uniform in `±1/√fan_in`, biases zero.
    pub fn init(cfg: &RankerConfig) -> Result<Self> {
        cfg.validate()?;
        let mut p = Self::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for (name, t) in p.named_mut() {
            if name.ends_with(".bias") {
                continue;
            }
            let fan_in: usize = t.shape[1..].iter().product();
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            for v in &mut t.data {
                *v = rng.gen_range(-bound..bound);
            }
        }
        Ok(p)
    }

    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (m, banks) in self.matchers.iter().enumerate() {
            for b in banks {
                out.push((alloc::format!("match{m}.conv{}.weight", b.size), &b.weight));
                out.push((alloc::format!("match{m}.conv{}.bias", b.size), &b.bias));
            }
        }
        for (i, d) in self.segments.iter().enumerate() {
            out.push((alloc::format!("segment{i}.weight"), &d.weight));
            out.push((alloc::format!("segment{i}.bias"), &d.bias));
        }
        out.push(("combine.hidden.weight".into(), &self.hidden.weight));
        out.push(("combine.hidden.bias".into(), &self.hidden.bias));
        out.push(("combine.output.weight".into(), &self.output.weight));
        out.push(("combine.output.bias".into(), &self.output.bias));
        out
    }

    /// Same order as [`RankerParams::named`].
    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (m, banks) in self.matchers.iter_mut().enumerate() {
            for b in banks {
                out.push((alloc::format!("match{m}.conv{}.weight", b.size), &mut b.weight));
                out.push((alloc::format!("match{m}.conv{}.bias", b.size), &mut b.bias));
            }
        }
        for (i, d) in self.segments.iter_mut().enumerate() {
            out.push((alloc::format!("segment{i}.weight"), &mut d.weight));
            out.push((alloc::format!("segment{i}.bias"), &mut d.bias));
        }
        out.push(("combine.hidden.weight".into(), &mut self.hidden.weight));
        out.push(("combine.hidden.bias".into(), &mut self.hidden.bias));
        out.push(("combine.output.weight".into(), &mut self.output.weight));
        out.push(("combine.output.bias".into(), &mut self.output.bias));
        out
    }

    pub fn n_params(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    /// Rebuild from named arrays, checking names and shapes against `cfg`.
    pub fn from_named(cfg: &RankerConfig, arrays: Vec<(String, Vec<usize>, Vec<f64>)>) -> Result<Self> {
        cfg.validate()?;
        let mut p = Self::zeros(cfg);
        let expected = p.named().len();
        if arrays.len() != expected {
            return Err(Error::Shape(alloc::format!(
                "checkpoint has {} tensors, variant `{}` needs {expected}",
                arrays.len(),
                cfg.variant
            )));
        }
        for ((name, t), (got_name, shape, data)) in p.named_mut().into_iter().zip(arrays) {
            if name != got_name {
                return Err(Error::Shape(alloc::format!(
                    "expected tensor `{name}`, found `{got_name}`"
                )));
            }
            if shape != t.shape || data.len() != t.len() {
                return Err(Error::Shape(alloc::format!(
                    "tensor `{name}` has shape {shape:?}, expected {:?}",
                    t.shape
                )));
            }
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Shape(alloc::format!("tensor `{name}` has non-finite values")));
            }
            t.data = data;
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.data.iter().all(|v| v.is_finite()))
    }

    /// Set every value to zero, keeping shapes.
    pub fn clear(&mut self) {
        for (_, t) in self.named_mut() {
            t.data.fill(0.0);
        }
    }
}

//! Tokenization, IDF statistics and word-embedding lookups.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Paragraph;
use crate::error::{invalid, Error, Result};
use crate::math;

/// Lowercase `text` and split it on every maximal run of non-alphanumeric
/// characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            // Some lowercase mappings emit combining marks; drop them so the
            // output re-tokenizes to itself.
            current.extend(c.to_lowercase().filter(|l| l.is_alphanumeric()));
        } else if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// BM25-smoothed inverse document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    n_docs: u32,
    df: BTreeMap<String, u32>,
}

impl IdfTable {
    pub fn from_paragraphs(paragraphs: &[Paragraph]) -> Result<Self> {
        if paragraphs.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        for p in paragraphs {
            let unique: BTreeSet<String> = tokenize(&p.text).into_iter().collect();
            for t in unique {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        Ok(Self {
            n_docs: paragraphs.len() as u32,
            df,
        })
    }

    /// Rebuild from stored counts, checking `0 < df ≤ n_docs`.
    pub fn from_counts(n_docs: u32, counts: impl IntoIterator<Item = (String, u32)>) -> Result<Self> {
        if n_docs == 0 {
            return Err(Error::Empty("corpus"));
        }
        let mut df = BTreeMap::new();
        for (t, c) in counts {
            if c == 0 || c > n_docs {
                return Err(invalid(alloc::format!("df({t}) = {c} outside (0, {n_docs}]")));
            }
            if df.insert(t.clone(), c).is_some() {
                return Err(Error::Duplicate(t));
            }
        }
        Ok(Self { n_docs, df })
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    pub fn df(&self, token: &str) -> u32 {
        self.df.get(token).copied().unwrap_or(0)
    }

    pub fn idf(&self, token: &str) -> f64 {
        idf_value(self.n_docs, self.df(token))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.df.iter().map(|(t, c)| (t.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.df.len()
    }

    pub fn is_empty(&self) -> bool {
        self.df.is_empty()
    }
}

/// `ln((N − df + 0.5) / (df + 0.5) + 1)`.
pub fn idf_value(n_docs: u32, df: u32) -> f64 {
    let n = f64::from(n_docs);
    let df = f64::from(df);
    math::ln((n - df + 0.5) / (df + 0.5) + 1.0)
}

/// Pretrained word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("embedding dimension must be positive"));
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite embedding component"));
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(t, v)| (t.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Similarity used for matrix construction: 1 for identical strings,
    /// cosine for two known tokens, 0 otherwise.
    pub fn token_similarity(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        match (self.get(a), self.get(b)) {
            (Some(x), Some(y)) => cosine_unchecked(x, y),
            _ => 0.0,
        }
    }
}

pub fn cosine_sim(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(cosine_unchecked(a, b))
}

pub(crate) fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (math::norm(a), math::norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (math::dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

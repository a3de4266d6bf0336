use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Which of the model extensions are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub use_position_vectors: bool,
    pub use_frequency_vector: bool,
    pub heading_independence: bool,
    pub use_kg_scores: bool,
}

impl Variant {
    pub const NAMES: [&'static str; 6] = ["base", "hp", "hp-hf", "hi", "hi-hf", "hi-hf-kg"];

    pub const BASE: Variant = Variant {
        use_position_vectors: false,
        use_frequency_vector: false,
        heading_independence: false,
        use_kg_scores: false,
    };

    pub fn all() -> Vec<Variant> {
        Self::NAMES.iter().map(|n| n.parse().expect("known variant")).collect()
    }

    pub fn name(&self) -> String {
        let mut parts = Vec::new();
        if self.heading_independence {
            parts.push("hi");
        }
        if self.use_position_vectors {
            parts.push("hp");
        }
        if self.use_frequency_vector {
            parts.push("hf");
        }
        if self.use_kg_scores {
            parts.push("kg");
        }
        if parts.is_empty() {
            String::from("base")
        } else {
            parts.join("-")
        }
    }

    /// Per-token contextual features appended after the IDF value.
    pub fn contextual_width(&self) -> usize {
        3 * usize::from(self.use_position_vectors) + usize::from(self.use_frequency_vector)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut v = Variant::BASE;
        if s == "base" {
            return Ok(v);
        }
        for part in s.split('-') {
            let flag = match part {
                "hp" => &mut v.use_position_vectors,
                "hf" => &mut v.use_frequency_vector,
                "hi" => &mut v.heading_independence,
                "kg" => &mut v.use_kg_scores,
                _ => return Err(invalid(alloc::format!("unknown variant `{s}`"))),
            };
            if *flag {
                return Err(invalid(alloc::format!("repeated component in variant `{s}`")));
            }
            *flag = true;
        }
        Ok(v)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Shapes and switches of the matcher. Everything here is needed to rebuild
/// parameter shapes, so it travels inside checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerConfig {
    pub max_query_len: usize,
    pub max_doc_len: usize,
    pub filter_sizes: Vec<usize>,
    pub filters_per_size: usize,
    pub kmax: usize,
    pub hidden: usize,
    pub n_entscores: usize,
    /// Title / intermediate / main capacities under heading independence.
    pub segment_lens: [usize; 3],
    pub variant: Variant,
    pub seed: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            max_query_len: 16,
            max_doc_len: 256,
            filter_sizes: vec![2, 3],
            filters_per_size: 16,
            kmax: 2,
            hidden: 32,
            n_entscores: 2,
            segment_lens: [6, 6, 4],
            variant: Variant::BASE,
            seed: 0,
        }
    }
}

/// The 6/6/4 split of 16, scaled to another query length.
pub fn default_segment_lens(max_query_len: usize) -> [usize; 3] {
    let title = (max_query_len * 6 + 8) / 16;
    let inter = (max_query_len * 6 + 8) / 16;
    [title, inter, max_query_len.saturating_sub(title + inter)]
}

impl RankerConfig {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// Set the query length and rescale the segment split with it.
    pub fn with_query_len(mut self, q: usize) -> Self {
        self.max_query_len = q;
        self.segment_lens = default_segment_lens(q);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_query_len", self.max_query_len),
            ("max_doc_len", self.max_doc_len),
            ("filters_per_size", self.filters_per_size),
            ("kmax", self.kmax),
            ("hidden", self.hidden),
            ("n_entscores", self.n_entscores),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(invalid(alloc::format!("{name} must be positive")));
        }
        if self.kmax > self.max_doc_len {
            return Err(invalid("kmax exceeds max_doc_len"));
        }
        if self.filter_sizes.is_empty() || self.filter_sizes.iter().any(|&s| s < 2) {
            return Err(invalid("filter sizes must be ≥ 2 (size 1 is the identity channel)"));
        }
        let mut sorted = self.filter_sizes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != self.filter_sizes {
            return Err(invalid("filter sizes must be strictly increasing"));
        }
        if self.variant.heading_independence {
            if self.segment_lens.contains(&0) {
                return Err(invalid("segment lengths must be positive"));
            }
            if self.segment_lens.iter().sum::<usize>() != self.max_query_len {
                return Err(invalid("segment lengths must add up to max_query_len"));
            }
        }
        Ok(())
    }

    /// Identity channel plus one per filter size.
    pub fn channels(&self) -> usize {
        self.filter_sizes.len() + 1
    }

    /// Features per query row: pooled channels, IDF, contextual vectors.
    pub fn row_width(&self) -> usize {
        self.channels() * self.kmax + 1 + self.variant.contextual_width()
    }

    /// Row capacity of each matching segment.
    pub fn segment_rows(&self) -> Vec<usize> {
        if self.variant.heading_independence {
            self.segment_lens.to_vec()
        } else {
            vec![self.max_query_len]
        }
    }

    /// Length of the flat feature vector (all query rows, then KG scores).
    pub fn feature_len(&self) -> usize {
        self.max_query_len * self.row_width() + self.kg_width()
    }

    pub fn kg_width(&self) -> usize {
        if self.variant.use_kg_scores {
            self.n_entscores
        } else {
            0
        }
    }

    /// Input width of the combination layer.
    pub fn combination_input(&self) -> usize {
        if self.variant.heading_independence {
            3 * self.hidden + self.kg_width()
        } else {
            self.feature_len()
        }
    }
}

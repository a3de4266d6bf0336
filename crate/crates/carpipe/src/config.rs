//! Flat `key = value` pipeline configuration.
//!
//! Path keys name artifacts, and each subcommand reads and writes them
//! under the same names, so one file can drive the whole pipeline:
//! `index` writes `index`, `retrieve` reads it and writes `run`, and so on.
//! Command-line flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use carpipe_core::kg::{HoleConfig, DEFAULT_MAX_LABELS};
use carpipe_core::ranker::{default_segment_lens, RankerConfig, TrainConfig, Variant};
use carpipe_core::retrieval::DEFAULT_DEPTH;

use crate::error::{Error, Result};

/// Every key naming a file or directory.
pub const PATH_KEYS: [&str; 17] = [
    "paragraphs",
    "outlines",
    "qrels",
    "embeddings",
    "idf",
    "headings",
    "index",
    "graph",
    "kg_embeddings",
    "checkpoint",
    "run",
    "valid_outlines",
    "valid_qrels",
    "valid_run",
    "rerank_run",
    "report",
    "analysis_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub paths: BTreeMap<String, PathBuf>,
    pub ranker: RankerConfig,
    pub train: TrainConfig,
    pub hole: HoleConfig,
    pub seed: Option<u64>,
    pub threads: usize,
    /// BM25 candidates per query.
    pub k: usize,
    pub max_labels: usize,
    pub tag: String,
    segment_lens_set: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            paths: BTreeMap::new(),
            ranker: RankerConfig::default(),
            train: TrainConfig::default(),
            hole: HoleConfig::default(),
            seed: None,
            threads: 1,
            k: DEFAULT_DEPTH,
            max_labels: DEFAULT_MAX_LABELS,
            tag: "carpipe".into(),
            segment_lens_set: false,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Usage(format!("invalid value `{value}` for `{key}`"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

impl PipelineConfig {
    /// Parse a config file body. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Usage(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Set one key. Unknown keys are usage errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if PATH_KEYS.contains(&key) {
            self.paths.insert(key.into(), PathBuf::from(value));
            return Ok(());
        }
        let r = &mut self.ranker;
        match key {
            "max_query_len" => {
                r.max_query_len = num(key, value)?;
                if !self.segment_lens_set {
                    r.segment_lens = default_segment_lens(r.max_query_len);
                }
            }
            "max_doc_len" => r.max_doc_len = num(key, value)?,
            "filter_sizes" => r.filter_sizes = list(key, value)?,
            "filters_per_size" => r.filters_per_size = num(key, value)?,
            "kmax" => r.kmax = num(key, value)?,
            "hidden" => r.hidden = num(key, value)?,
            "n_entscores" => r.n_entscores = num(key, value)?,
            "segment_lens" => {
                let v = list(key, value)?;
                r.segment_lens = v.try_into().map_err(|_| bad(key, value))?;
                self.segment_lens_set = true;
            }
            "variant" => r.variant = value.parse::<Variant>().map_err(|e| Error::Usage(e.to_string()))?,
            "epochs" => self.train.epochs = num(key, value)?,
            "learning_rate" => self.train.learning_rate = num(key, value)?,
            "negatives" => self.train.negatives = num(key, value)?,
            "depth" => self.train.depth = num(key, value)?,
            "hole_dim" => self.hole.dim = num(key, value)?,
            "hole_iterations" => self.hole.iterations = num(key, value)?,
            "hole_learning_rate" => self.hole.learning_rate = num(key, value)?,
            "hole_margin" => self.hole.margin = num(key, value)?,
            "hole_negatives" => self.hole.negatives = num(key, value)?,
            "seed" => self.seed = Some(num(key, value)?),
            "threads" => self.threads = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "max_labels" => self.max_labels = num(key, value)?,
            "tag" => self.tag = value.into(),
            _ => return Err(Error::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Apply `KEY=VALUE` overrides.
    pub fn apply_overrides<'a>(&mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("expected KEY=VALUE, got `{pair}`")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Path under `key`; it must name an existing file or directory.
    pub fn input(&self, key: &str) -> Result<&Path> {
        let p = self
            .paths
            .get(key)
            .ok_or_else(|| Error::Usage(format!("no path given for `{key}`")))?;
        if !p.exists() {
            return Err(Error::Data(format!("{}: input `{key}` does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn optional_input(&self, key: &str) -> Result<Option<&Path>> {
        match self.paths.contains_key(key) {
            true => self.input(key).map(Some),
            false => Ok(None),
        }
    }

    pub fn output(&self, key: &str) -> Result<&Path> {
        self.paths
            .get(key)
            .map(PathBuf::as_path)
            .ok_or_else(|| Error::Usage(format!("no path given for `{key}`")))
    }

    /// Seed for commands that train; mandatory there.
    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Usage("a seed is required (--seed N or `seed = N`)".into()))
    }

    pub fn seeded_ranker(&self) -> Result<RankerConfig> {
        let mut r = self.ranker.clone();
        r.seed = self.require_seed()?;
        r.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(r)
    }

    pub fn seeded_hole(&self) -> Result<HoleConfig> {
        Ok(HoleConfig {
            seed: self.require_seed()?,
            ..self.hole.clone()
        })
    }
}

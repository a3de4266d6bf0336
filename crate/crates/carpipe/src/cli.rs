//! Command-line surface.

use std::path::PathBuf;

use carpipe_core::eval::JudgmentMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(
    name = "carpipe",
    version,
    about = "Complex-answer retrieval: BM25, neural reranking, evaluation"
)]
pub struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Seed for every random draw; training commands refuse to run without one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Ranker variant: base, hp, hp-hf, hi, hi-hf or hi-hf-kg.
    #[arg(long, global = true)]
    pub variant: Option<String>,
    /// Worker threads for retrieval and reranking.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Out {
    /// Output path, overriding the configured one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Include,
    Exclude,
}

impl From<Mode> for JudgmentMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Include => JudgmentMode::Include,
            Mode::Exclude => JudgmentMode::Exclude,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the BM25 inverted index over the paragraphs.
    Index(Out),
    /// Write the IDF table and the heading-frequency table.
    Stats,
    /// Build the query-entity knowledge graph from relevant paragraphs.
    BuildKg {
        #[arg(long)]
        max_labels: Option<usize>,
        #[command(flatten)]
        out: Out,
    },
    /// Train HolE embeddings on the knowledge graph.
    TrainKg(Out),
    /// BM25 candidate retrieval for every outline.
    Retrieve {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        tag: Option<String>,
        #[command(flatten)]
        out: Out,
    },
    /// Train the neural reranker.
    Train(Out),
    /// Rerank a candidate run with a trained checkpoint.
    Rerank(Out),
    /// Score a run against qrels.
    Evaluate {
        /// Run to score; defaults to the configured `rerank_run`, else `run`.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "include")]
        mode: Mode,
        /// Also report mean AP per main-heading frequency stratum.
        #[arg(long)]
        stratify: bool,
        /// Report path prefix; without it the table goes to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Heading occurrence rates in relevant paragraphs.
    Analyze(Out),
}

impl Cli {
    /// Merge file, `--set` and flag values, in that order of precedence.
    pub fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        cfg.apply_overrides(self.set.iter().map(String::as_str))?;
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        Ok(cfg)
    }

    pub fn run(&self) -> Result<()> {
        let mut cfg = self.config()?;
        let set_out = |cfg: &mut PipelineConfig, key: &str, out: &Out| {
            if let Some(p) = &out.out {
                cfg.paths.insert(key.into(), p.clone());
            }
        };
        // Training commands take the variant as a setting; rerank checks it
        // against the checkpoint instead.
        if let (Some(v), false) = (&self.variant, matches!(self.command, Command::Rerank(_))) {
            cfg.set("variant", v)?;
        }
        match &self.command {
            Command::Index(out) => {
                set_out(&mut cfg, "index", out);
                pipeline::index(&cfg)
            }
            Command::Stats => pipeline::stats(&cfg),
            Command::BuildKg { max_labels, out } => {
                set_out(&mut cfg, "graph", out);
                if let Some(m) = max_labels {
                    cfg.max_labels = *m;
                }
                pipeline::build_kg(&cfg)
            }
            Command::TrainKg(out) => {
                set_out(&mut cfg, "kg_embeddings", out);
                pipeline::train_kg(&cfg)
            }
            Command::Retrieve { k, tag, out } => {
                set_out(&mut cfg, "run", out);
                if let Some(k) = k {
                    cfg.k = *k;
                }
                if let Some(t) = tag {
                    cfg.tag = t.clone();
                }
                pipeline::retrieve(&cfg)
            }
            Command::Train(out) => {
                set_out(&mut cfg, "checkpoint", out);
                pipeline::train_ranker(&cfg)
            }
            Command::Rerank(out) => {
                set_out(&mut cfg, "rerank_run", out);
                pipeline::rerank_cmd(&cfg, self.variant.as_deref())
            }
            Command::Evaluate {
                run,
                mode,
                stratify,
                report,
            } => {
                if let Some(r) = report {
                    cfg.paths.insert("report".into(), r.clone());
                }
                let key = match run {
                    Some(p) => {
                        cfg.paths.insert("eval_run".into(), p.clone());
                        "eval_run"
                    }
                    None if cfg.paths.contains_key("rerank_run") => "rerank_run",
                    None => "run",
                };
                pipeline::evaluate_cmd(&cfg, key, (*mode).into(), *stratify)
            }
            Command::Analyze(out) => {
                set_out(&mut cfg, "analysis_dir", out);
                pipeline::analyze(&cfg)
            }
        }
    }
}

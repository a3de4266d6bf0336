//! One function per subcommand: read inputs, call the core, write outputs.

use std::collections::BTreeMap;
use std::path::Path;

use carpipe_core::corpus::{HeadingRole, Paragraph, Qrels, Query};
use carpipe_core::eval::{check_run, evaluate, stratified_report, JudgmentMode, Run};
use carpipe_core::facets::{binned_occurrence_by_frequency, kde, linspace, occurrence_analysis, HeadingFrequencyTable};
use carpipe_core::kg::{train_hole, HoleEmbeddings, KnowledgeGraph, LinkMentions, RelationVocab};
use carpipe_core::ranker::{
    build_train_samples, paragraph_lookup, rerank, train, KgContext, RankContext, RankerConfig, RankerParams, TrainSet,
    ValidationSet,
};
use carpipe_core::retrieval::{InvertedIndex, ScoredDoc};
use carpipe_core::text::{EmbeddingTable, IdfTable};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::formats::{checkpoint, corpus, index, kg, report, run, tables, text};
use crate::fsutil::{read_with, write_atomic};

/// Grid of the occurrence-rate density curves.
pub const KDE_POINTS: usize = 101;

pub fn load_paragraphs(path: &Path) -> Result<Vec<Paragraph>> {
    read_with(path, corpus::parse_paragraphs)
}

pub fn load_outlines(path: &Path) -> Result<Vec<Query>> {
    read_with(path, corpus::parse_outlines)
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    read_with(path, corpus::parse_qrels)
}

pub fn load_run(path: &Path) -> Result<Run> {
    read_with(path, run::parse_run)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Data(format!("thread pool: {e}")))
}

pub fn index(cfg: &PipelineConfig) -> Result<()> {
    let paragraphs = load_paragraphs(cfg.input("paragraphs")?)?;
    let idx = InvertedIndex::build(&paragraphs)?;
    log::info!("indexed {} paragraphs, {} terms", idx.n_docs(), idx.terms().count());
    write_atomic(cfg.output("index")?, |w| index::write_index(w, &idx))
}

/// IDF table from paragraphs and/or heading-frequency table from outlines,
/// whichever inputs and outputs are configured.
pub fn stats(cfg: &PipelineConfig) -> Result<()> {
    let mut wrote = false;
    if let (Some(p), Some(out)) = (cfg.optional_input("paragraphs")?, cfg.paths.get("idf")) {
        let idf = IdfTable::from_paragraphs(&load_paragraphs(p)?)?;
        write_atomic(out, |w| text::write_idf(w, &idf))?;
        wrote = true;
    }
    if let (Some(o), Some(out)) = (cfg.optional_input("outlines")?, cfg.paths.get("headings")) {
        let table = HeadingFrequencyTable::from_outlines(&load_outlines(o)?)?;
        log::info!("heading breakpoints (p60, p90, p99): {:?}", table.breakpoints());
        write_atomic(out, |w| tables::write_heading_table(w, &table))?;
        wrote = true;
    }
    if !wrote {
        return Err(Error::Usage(
            "stats needs paragraphs + idf and/or outlines + headings".into(),
        ));
    }
    Ok(())
}

pub fn build_kg(cfg: &PipelineConfig) -> Result<()> {
    let outlines = load_outlines(cfg.input("outlines")?)?;
    let qrels = load_qrels(cfg.input("qrels")?)?;
    let paragraphs = load_paragraphs(cfg.input("paragraphs")?)?;
    let vocab = RelationVocab::from_outlines(&outlines, cfg.max_labels);
    let graph = KnowledgeGraph::build(&outlines, &qrels, &paragraphs, &LinkMentions, &vocab);
    log::info!(
        "graph: {} entities, {} relations, {} triples",
        graph.n_entities(),
        graph.n_relations(),
        graph.len()
    );
    write_atomic(cfg.output("graph")?, |w| kg::write_graph(w, &graph))
}

pub fn train_kg(cfg: &PipelineConfig) -> Result<()> {
    let hole_cfg = cfg.seeded_hole()?;
    let graph = read_with(cfg.input("graph")?, kg::parse_graph)?;
    let trained = train_hole(&graph, &hole_cfg)?;
    log::info!(
        "kept epoch {} with mean loss {:.6}",
        trained.best_epoch + 1,
        trained.epoch_losses[trained.best_epoch]
    );
    write_atomic(cfg.output("kg_embeddings")?, |w| kg::write_hole(w, &trained.embeddings))
}

pub fn retrieve(cfg: &PipelineConfig) -> Result<()> {
    let idx = read_with(cfg.input("index")?, index::parse_index)?;
    let outlines = load_outlines(cfg.input("outlines")?)?;
    let results: Vec<(String, Vec<ScoredDoc>)> = pool(cfg.threads)?.install(|| {
        outlines
            .par_iter()
            .map(|q| Ok((q.qid.clone(), idx.search(q, cfg.k)?)))
            .collect::<Result<_>>()
    })?;
    let run: Run = results.into_iter().collect();
    write_atomic(cfg.output("run")?, |w| run::write_run(w, &run, &cfg.tag))
}

/// Scoring inputs shared by `train` and `rerank`.
pub struct Resources {
    pub paragraphs: Vec<Paragraph>,
    pub embeddings: EmbeddingTable,
    pub idf: IdfTable,
    pub headings: Option<HeadingFrequencyTable>,
    pub kg: Option<(HoleEmbeddings, RelationVocab)>,
}

impl Resources {
    /// Loads what the variant needs; missing required inputs are errors.
    pub fn load(cfg: &PipelineConfig, ranker: &RankerConfig) -> Result<Self> {
        let v = ranker.variant;
        let headings = match v.use_frequency_vector {
            true => Some(read_with(cfg.input("headings")?, tables::parse_heading_table)?),
            false => None,
        };
        let kg = match v.use_kg_scores {
            true => {
                let emb = read_with(cfg.input("kg_embeddings")?, kg::parse_hole)?;
                let vocab = RelationVocab::from_labels(emb.relations().map(|(r, _)| r.to_string()));
                Some((emb, vocab))
            }
            false => None,
        };
        Ok(Self {
            paragraphs: load_paragraphs(cfg.input("paragraphs")?)?,
            embeddings: read_with(cfg.input("embeddings")?, text::parse_embeddings)?,
            idf: read_with(cfg.input("idf")?, text::parse_idf)?,
            headings,
            kg,
        })
    }

    pub fn context(&self) -> RankContext<'_> {
        RankContext {
            embeddings: &self.embeddings,
            idf: &self.idf,
            headings: self.headings.as_ref(),
            kg: self.kg.as_ref().map(|(embeddings, vocab)| KgContext {
                embeddings,
                vocab,
                source: &LinkMentions,
            }),
        }
    }
}

pub fn train_ranker(cfg: &PipelineConfig) -> Result<()> {
    let ranker = cfg.seeded_ranker()?;
    let res = Resources::load(cfg, &ranker)?;
    let outlines = load_outlines(cfg.input("outlines")?)?;
    let qrels = load_qrels(cfg.input("qrels")?)?;
    let candidates = load_run(cfg.input("run")?)?;
    let valid_outlines = load_outlines(cfg.input("valid_outlines")?)?;
    let valid_qrels = match cfg.paths.contains_key("valid_qrels") {
        true => load_qrels(cfg.input("valid_qrels")?)?,
        false => qrels.clone(),
    };
    let valid_run = match cfg.paths.contains_key("valid_run") {
        true => load_run(cfg.input("valid_run")?)?,
        false => candidates.clone(),
    };

    let train_qids: std::collections::BTreeSet<&str> = outlines.iter().map(|q| q.qid.as_str()).collect();
    let train_candidates: Run = candidates
        .iter()
        .filter(|(q, _)| train_qids.contains(q.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let samples = build_train_samples(&qrels, &train_candidates, cfg.train.negatives);
    log::info!(
        "{} training samples over {} queries",
        samples.len(),
        train_candidates.len()
    );
    let lookup = paragraph_lookup(&res.paragraphs);
    let outcome = train(
        &TrainSet {
            queries: &outlines,
            samples: &samples,
        },
        &ValidationSet {
            queries: &valid_outlines,
            candidates: &valid_run,
            qrels: &valid_qrels,
        },
        &lookup,
        &res.context(),
        &ranker,
        &cfg.train,
    )?;
    for (e, (loss, rp)) in outcome.epoch_losses.iter().zip(&outcome.val_rprec).enumerate() {
        log::debug!("epoch {:>3}: loss {loss:.6}, validation R-Prec {rp:.4}", e + 1);
    }
    log::info!(
        "kept epoch {} (validation R-Prec {:.4})",
        outcome.best_epoch + 1,
        outcome.val_rprec[outcome.best_epoch]
    );
    write_atomic(cfg.output("checkpoint")?, |w| {
        checkpoint::write_checkpoint(w, &ranker, &outcome.params)
    })
}

pub fn load_checkpoint(path: &Path) -> Result<checkpoint::Checkpoint> {
    read_with(path, checkpoint::parse_checkpoint)
}

/// Rerank every query of a run with a trained checkpoint.
pub fn rerank_run(
    run: &Run,
    outlines: &[Query],
    res: &Resources,
    params: &RankerParams,
    ranker: &RankerConfig,
    depth: usize,
    threads: usize,
) -> Result<Run> {
    let lookup = paragraph_lookup(&res.paragraphs);
    let by_qid: BTreeMap<&str, &Query> = outlines.iter().map(|q| (q.qid.as_str(), q)).collect();
    let jobs: Vec<(&String, &Vec<ScoredDoc>)> = run.iter().collect();
    let results: Vec<(String, Vec<ScoredDoc>)> = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|(qid, ranking)| {
                let q = by_qid
                    .get(qid.as_str())
                    .ok_or_else(|| Error::Data(format!("run query `{qid}` is not in the outlines")))?;
                let cands = &ranking[..ranking.len().min(depth)];
                Ok((
                    (*qid).clone(),
                    rerank(q, cands, &lookup, params, ranker, &res.context())?,
                ))
            })
            .collect::<Result<_>>()
    })?;
    Ok(results.into_iter().collect())
}

pub fn rerank_cmd(cfg: &PipelineConfig, variant_flag: Option<&str>) -> Result<()> {
    let ck = load_checkpoint(cfg.input("checkpoint")?)?;
    if let Some(v) = variant_flag {
        if v != ck.config.variant.name() {
            return Err(Error::Data(format!(
                "checkpoint was trained as `{}` but `{v}` was requested",
                ck.config.variant
            )));
        }
    }
    let res = Resources::load(cfg, &ck.config)?;
    let outlines = load_outlines(cfg.input("outlines")?)?;
    let candidates = load_run(cfg.input("run")?)?;
    let out = rerank_run(
        &candidates,
        &outlines,
        &res,
        &ck.params,
        &ck.config,
        cfg.train.depth,
        cfg.threads,
    )?;
    let tag = format!("{}-{}", cfg.tag, ck.config.variant);
    write_atomic(cfg.output("rerank_run")?, |w| run::write_run(w, &out, &tag))
}

/// Appends `suffix` to the file name of `prefix`.
fn with_suffix(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    s.into()
}

/// Writes `<report>.txt`, `<report>.csv` (per query) and `<report>.means.csv`;
/// with `stratify`, also `<report>.strata.txt` and `<report>.strata.csv`.
/// Without a report path the text table goes to stdout.
pub fn evaluate_cmd(cfg: &PipelineConfig, run_key: &str, mode: JudgmentMode, stratify: bool) -> Result<()> {
    let run = load_run(cfg.input(run_key)?)?;
    check_run(&run)?;
    let qrels = load_qrels(cfg.input("qrels")?)?;
    let rep = evaluate(&run, &qrels, mode)?;
    if !rep.skipped.is_empty() {
        log::warn!(
            "{} run queries have no relevant judgments and were skipped",
            rep.skipped.len()
        );
    }
    let strata = match stratify {
        true => {
            let outlines = load_outlines(cfg.input("outlines")?)?;
            let table = read_with(cfg.input("headings")?, tables::parse_heading_table)?;
            Some(stratified_report(&run, &qrels, &outlines, &table, mode)?)
        }
        false => None,
    };
    match cfg.paths.get("report") {
        Some(prefix) => {
            write_atomic(&with_suffix(prefix, ".txt"), |w| report::write_report_text(w, &rep))?;
            write_atomic(&with_suffix(prefix, ".csv"), |w| report::write_report_csv(w, &rep))?;
            write_atomic(&with_suffix(prefix, ".means.csv"), |w| report::write_means_csv(w, &rep))?;
            if let Some(s) = &strata {
                write_atomic(&with_suffix(prefix, ".strata.txt"), |w| report::write_strata_text(w, s))?;
                write_atomic(&with_suffix(prefix, ".strata.csv"), |w| report::write_strata_csv(w, s))?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            report::write_report_text(&mut out, &rep)?;
            if let Some(s) = &strata {
                report::write_strata_text(&mut out, s)?;
            }
        }
    }
    Ok(())
}

/// Occurrence rates per heading instance and pooled main heading, their
/// density curves on [0, 1] and the frequency-binned means.
pub fn analyze(cfg: &PipelineConfig) -> Result<()> {
    let outlines = load_outlines(cfg.input("outlines")?)?;
    let qrels = load_qrels(cfg.input("qrels")?)?;
    let paragraphs = load_paragraphs(cfg.input("paragraphs")?)?;
    let table = match cfg.optional_input("headings")? {
        Some(p) => read_with(p, tables::parse_heading_table)?,
        None => HeadingFrequencyTable::from_outlines(&outlines)?,
    };
    let lookup = paragraph_lookup(&paragraphs);
    let analysis = occurrence_analysis(
        &outlines,
        |q| {
            qrels
                .relevant(&q.qid)
                .into_iter()
                .filter_map(|pid| lookup.get(pid).copied())
                .collect()
        },
        &table,
    );
    let grid = linspace(0.0, 1.0, KDE_POINTS);
    let mut curves = Vec::new();
    for role in HeadingRole::ALL {
        let values = analysis.values(role);
        match kde(&values, &grid) {
            Ok(d) => curves.push((role.name(), grid.clone(), d)),
            Err(_) => log::warn!("too few {} headings for a density curve", role.name()),
        }
        if let Some(m) = analysis.mean(role) {
            log::info!("mean occ ({}): {m:.4} over {} headings", role.name(), values.len());
        }
    }
    let bins = binned_occurrence_by_frequency(&analysis.main_headings);
    let dir = cfg.output("analysis_dir")?;
    write_atomic(&dir.join("occurrence.csv"), |w| {
        report::write_occurrence_csv(w, &analysis.main_headings)
    })?;
    write_atomic(&dir.join("kde.csv"), |w| report::write_kde_csv(w, &curves))?;
    write_atomic(&dir.join("frequency_bins.csv"), |w| report::write_bins_csv(w, &bins))
}

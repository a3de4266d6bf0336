//! Seeded synthetic corpora.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use carpipe::config::PipelineConfig;
use carpipe::formats::{corpus, text};
use carpipe::fsutil::write_atomic;
use carpipe_core::corpus::{Paragraph, Qrels, Query};
use carpipe_core::eval::Run;
use carpipe_core::facets::HeadingFrequencyTable;
use carpipe_core::kg::{KnowledgeGraph, Triple};
use carpipe_core::retrieval::ScoredDoc;
use carpipe_core::text::EmbeddingTable;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-letter suffix; distinct for `i < 676`.
pub fn alpha(i: usize) -> String {
    let l = |x: usize| char::from(b'a' + (x % 26) as u8);
    format!("{}{}", l(i / 26), l(i))
}

/// The turtle query and a table where both non-title headings sit above
/// the 99th percentile.
pub fn table2() -> (Query, HeadingFrequencyTable) {
    let q = Query::new("q", ["green sea turtle", "ecology and behavior", "life cycle"]).unwrap();
    let mut counts: Vec<(String, u32)> = (0..200).map(|i| (format!("rare heading {i}"), 1)).collect();
    counts.extend([
        ("green sea turtle".into(), 1),
        ("ecology and behavior".into(), 50),
        ("life cycle".into(), 50),
    ]);
    (q, HeadingFrequencyTable::from_counts(counts).unwrap())
}

pub fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<Paragraph> {
    let vocab: Vec<String> = (0..15).map(|i| format!("w{}", alpha(i))).collect();
    let n = rng.gen_range(1..40);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(1..20);
            let words: Vec<&str> = (0..len)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].as_str())
                .collect();
            Paragraph::new(format!("d{i:02}"), words.join(" "))
        })
        .collect()
}

pub fn random_query_tokens(rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..rng.gen_range(1..5))
        .map(|_| format!("w{}", alpha(rng.gen_range(0..17))))
        .collect()
}

/// A run and qrels over overlapping but not identical query and paragraph sets.
pub fn random_eval_instance(rng: &mut ChaCha8Rng) -> (Run, Qrels) {
    let pool: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
    let mut run = Run::new();
    let mut qrels = Qrels::new();
    for q in 0..rng.gen_range(1..6) {
        let qid = format!("q{q}");
        if rng.gen_bool(0.85) {
            let mut ids = pool.clone();
            ids.shuffle(rng);
            ids.truncate(rng.gen_range(0..16));
            let mut score = 10.0;
            let ranking = ids
                .into_iter()
                .map(|id| {
                    score -= rng.gen_range(0.0..1.0);
                    ScoredDoc::new(id, score)
                })
                .collect();
            run.insert(qid.clone(), ranking);
        }
        if rng.gen_bool(0.85) {
            for id in &pool {
                if rng.gen_bool(0.4) {
                    qrels.insert(&qid, id, rng.gen_range(-2..=3)).unwrap();
                }
            }
        }
    }
    (run, qrels)
}

/// Each cluster is a ring of 10 entities joined by offsets 1 and 3.
pub fn two_clusters() -> KnowledgeGraph {
    let mut triples = Vec::new();
    for c in 0..2 {
        for i in 0..10 {
            for j in [1, 3] {
                triples.push(Triple::new(
                    format!("c{c}e{i}"),
                    "near",
                    format!("c{c}e{}", (i + j) % 10),
                ));
            }
        }
    }
    KnowledgeGraph::from_triples(triples).unwrap()
}

fn words_text(rng: &mut ChaCha8Rng, mut words: Vec<String>) -> String {
    words.shuffle(rng);
    words.join(" ")
}

pub struct Planted {
    pub outlines: Vec<Query>,
    pub paragraphs: Vec<Paragraph>,
    pub qrels: Qrels,
    pub table: HeadingFrequencyTable,
}

/// Rates at which each main-heading frequency bin plants its term; the
/// mean over bins is 0.8.
pub const PLANTED_MAIN: [f64; 3] = [0.95, 0.8, 0.65];
pub const PLANTED_TITLE: f64 = 0.6;
pub const PLANTED_INTER: f64 = 0.3;

/// 300 three-level queries with three relevant paragraphs each. Every
/// relevant paragraph independently carries the title term with
/// probability 0.6, the intermediate term with 0.3 and the main term with
/// the rate of its frequency bin.
pub fn planted(seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_main = 60;
    let freq = |h: usize| (2 + 100 * (h % 3) + (h * 37) % 97) as u32;
    let mut counts: Vec<(String, u32)> = (0..n_main).map(|h| (format!("m{}", alpha(h)), freq(h))).collect();
    counts.extend((0..20).map(|i| (format!("i{}", alpha(i)), 5)));
    let mut outlines = Vec::new();
    let mut paragraphs = Vec::new();
    let mut qrels = Qrels::new();
    for qi in 0..300 {
        let (title, inter, main) = (format!("t{}", alpha(qi)), format!("i{}", alpha(qi % 20)), qi % n_main);
        counts.push((title.clone(), 1));
        let qid = format!("q{qi}");
        let main_word = format!("m{}", alpha(main));
        outlines.push(Query::new(qid.clone(), [title.clone(), inter.clone(), main_word.clone()]).unwrap());
        for r in 0..3 {
            let mut words: Vec<String> = (0..8).map(|_| format!("f{}", alpha(rng.gen_range(0..50)))).collect();
            for (w, p) in [
                (&title, PLANTED_TITLE),
                (&inter, PLANTED_INTER),
                (&main_word, PLANTED_MAIN[main % 3]),
            ] {
                if rng.gen_bool(p) {
                    words.push(w.clone());
                }
            }
            let pid = format!("{qid}-{r}");
            paragraphs.push(Paragraph::new(pid.clone(), words_text(&mut rng, words)));
            qrels.insert(&qid, &pid, 1).unwrap();
        }
    }
    Planted {
        outlines,
        paragraphs,
        qrels,
        table: HeadingFrequencyTable::from_counts(counts).unwrap(),
    }
}

/// Retrieval corpus where half of the queries have main headings whose
/// terms occur in no paragraph at all. For those, only the entity links of
/// the relevant paragraphs separate them from same-section decoys.
pub struct Dataset {
    pub paragraphs: Vec<Paragraph>,
    pub train: Vec<Query>,
    pub valid: Vec<Query>,
    pub test: Vec<Query>,
    pub qrels: Qrels,
    pub embeddings: EmbeddingTable,
    pub low_utility: BTreeSet<String>,
}

pub const ARTICLES: usize = 10;
pub const SECTIONS: [&str; 2] = ["Ecology", "History"];
pub const EMBED_DIM: usize = 16;

/// 10 articles × 2 sections × 2 queries, with 2 relevant paragraphs and 3
/// decoys per query (200 paragraphs). Relevant paragraphs of both queries
/// in a section link entities from a pool owned by (article, section);
/// decoys link entities of other articles. The first query of each section
/// trains; the second validates (articles 0-3) or tests (the rest).
pub fn dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool =
        |a: usize, j: usize| -> Vec<String> { (0..3).map(|m| format!("e{}", alpha((a * 2 + j) * 3 + m))).collect() };
    let mut ids: Vec<usize> = (0..ARTICLES * 2 * 2 * 5).collect();
    ids.shuffle(&mut rng);
    let mut next_id = ids.into_iter().map(|i| format!("p{i:03}"));
    let filler = |rng: &mut ChaCha8Rng| -> Vec<String> {
        (0..rng.gen_range(8..13))
            .map(|_| format!("f{}", alpha(rng.gen_range(0..40))))
            .collect()
    };

    let mut ds = Dataset {
        paragraphs: Vec::new(),
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        qrels: Qrels::new(),
        embeddings: EmbeddingTable::new(EMBED_DIM).unwrap(),
        low_utility: BTreeSet::new(),
    };
    let mut vocab: BTreeSet<String> = SECTIONS.iter().map(|s| s.to_lowercase()).collect();
    vocab.extend((0..40).map(|i| format!("f{}", alpha(i))));
    for a in 0..ARTICLES {
        let title = format!("t{}", alpha(a));
        vocab.insert(title.clone());
        for (j, section) in SECTIONS.iter().enumerate() {
            for k in 0..2 {
                let qi = (a * 2 + j) * 2 + k;
                let qid = format!("q{qi:02}");
                let main = format!("m{}", alpha(qi));
                vocab.insert(main.clone());
                let low = (a + j + k) % 2 == 1;
                if low {
                    ds.low_utility.insert(qid.clone());
                }
                let base = vec![title.clone(), section.to_lowercase()];
                for r in 0..5 {
                    let relevant = r < 2;
                    let mut words = base.clone();
                    words.extend(filler(&mut rng));
                    let mut links = Vec::new();
                    if relevant {
                        if !low {
                            words.push(main.clone());
                        }
                        let mut own = pool(a, j);
                        own.shuffle(&mut rng);
                        links.extend(own.into_iter().take(2));
                    } else {
                        let other = (a + rng.gen_range(1..ARTICLES)) % ARTICLES;
                        let p = pool(other, rng.gen_range(0..2));
                        links.push(p[rng.gen_range(0..3)].clone());
                    }
                    words.extend(links.iter().cloned());
                    let pid = next_id.next().unwrap();
                    let mut p = Paragraph::new(pid.clone(), words_text(&mut rng, words));
                    for e in links {
                        p = p.with_link(e.to_uppercase(), e);
                    }
                    ds.paragraphs.push(p);
                    ds.qrels.insert(&qid, &pid, i32::from(relevant)).unwrap();
                }
                let q = Query::new(qid, [title.to_uppercase(), section.to_string(), main.to_uppercase()]).unwrap();
                match (k, a < 4) {
                    (0, _) => ds.train.push(q),
                    (_, true) => ds.valid.push(q),
                    _ => ds.test.push(q),
                }
            }
        }
    }
    for w in vocab {
        let v = (0..EMBED_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ds.embeddings.insert(w, v).unwrap();
    }
    ds
}

impl Dataset {
    pub fn all_queries(&self) -> Vec<Query> {
        let mut all: Vec<Query> = self
            .train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .cloned()
            .collect();
        all.sort_by(|a, b| a.qid.cmp(&b.qid));
        all
    }

    /// Writes every input file into `dir` and returns a config naming them
    /// plus the artifact paths, with small model settings.
    pub fn write(&self, dir: &Path) -> PipelineConfig {
        let p = |n: &str| dir.join(n);
        write_atomic(&p("paragraphs.jsonl"), |w| {
            corpus::write_paragraphs(w, &self.paragraphs)
        })
        .unwrap();
        write_atomic(&p("train.jsonl"), |w| corpus::write_outlines(w, &self.train)).unwrap();
        write_atomic(&p("valid.jsonl"), |w| corpus::write_outlines(w, &self.valid)).unwrap();
        write_atomic(&p("test.jsonl"), |w| corpus::write_outlines(w, &self.test)).unwrap();
        write_atomic(&p("all.jsonl"), |w| corpus::write_outlines(w, &self.all_queries())).unwrap();
        write_atomic(&p("qrels.txt"), |w| corpus::write_qrels(w, &self.qrels)).unwrap();
        write_atomic(&p("embeddings.txt"), |w| text::write_embeddings(w, &self.embeddings)).unwrap();
        let mut cfg = super::config_in(
            dir,
            &[
                ("paragraphs", "paragraphs.jsonl"),
                ("outlines", "train.jsonl"),
                ("valid_outlines", "valid.jsonl"),
                ("qrels", "qrels.txt"),
                ("embeddings", "embeddings.txt"),
                ("idf", "idf.txt"),
                ("headings", "headings.tsv"),
                ("index", "index.json"),
                ("graph", "graph.tsv"),
                ("kg_embeddings", "hole.txt"),
                ("run", "bm25.run"),
                ("checkpoint", "model.json"),
                ("rerank_run", "rerank.run"),
            ],
        );
        for (k, v) in SMALL_MODEL {
            cfg.set(k, v).unwrap();
        }
        cfg
    }
}

/// Model settings sized for debug-build test runs.
pub const SMALL_MODEL: [(&str, &str); 11] = [
    ("max_query_len", "8"),
    ("max_doc_len", "24"),
    ("filters_per_size", "4"),
    ("hidden", "8"),
    ("epochs", "30"),
    ("depth", "20"),
    ("k", "20"),
    ("hole_dim", "16"),
    ("hole_iterations", "300"),
    ("hole_learning_rate", "0.1"),
    ("threads", "1"),
];

/// Per-query rankings of `run` restricted to `qids`.
pub fn restrict(run: &Run, qids: &BTreeSet<String>) -> Run {
    run.iter()
        .filter(|(q, _)| qids.contains(*q))
        .map(|(q, r)| (q.clone(), r.clone()))
        .collect()
}

pub fn qid_set(queries: &[Query]) -> BTreeSet<String> {
    queries.iter().map(|q| q.qid.clone()).collect()
}

/// Shuffle each ranking `n` times; returns every shuffled run.
pub fn shuffled_runs(run: &Run, n: usize, seed: u64) -> Vec<Run> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            run.iter()
                .map(|(q, r)| {
                    let mut r = r.clone();
                    r.shuffle(&mut rng);
                    (q.clone(), r)
                })
                .collect()
        })
        .collect()
}

pub fn counts_by<'a>(items: impl IntoIterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i).or_insert(0) += 1;
    }
    m
}

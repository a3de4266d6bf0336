//! The binary's exit codes and the files each subcommand leaves behind.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use carpipe::formats::{corpus, run, tables};
use carpipe::fsutil::write_atomic;
use carpipe_core::eval::Run;
use carpipe_core::retrieval::ScoredDoc;
use common::{carpipe, pipeline_dir};

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = carpipe(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Directory with the dataset, an index and a BM25 run over every query.
fn retrieved() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    pipeline_dir(dir.path(), 9);
    for args in &common::PIPELINE[..5] {
        ok(dir.path(), args);
    }
    dir
}

#[test]
fn help_and_version_succeed() {
    for flag in ["--help", "--version"] {
        let out = Command::new(common::bin()).arg(flag).output().unwrap();
        assert_eq!(code(&out), 0, "{flag}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_dir(dir.path(), 1);
    for args in [
        &["frobnicate"][..],
        &["index", "--no-such-flag"],
        &["index", "--set", "colour=blue"],
        &["index", "--set", "no-equals-sign"],
        &["evaluate", "--mode", "sometimes"],
    ] {
        let out = carpipe(dir.path(), args);
        assert_eq!(code(&out), 1, "{args:?}");
    }
}

#[test]
fn training_needs_a_seed() {
    let dir = retrieved();
    let conf = dir.path().join("carpipe.conf");
    let text = fs::read_to_string(&conf).unwrap();
    let unseeded: String = text
        .lines()
        .filter(|l| !l.starts_with("seed"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&conf, unseeded).unwrap();
    let out = carpipe(dir.path(), &["train"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    ok(dir.path(), &["train", "--seed", "3"]);
}

#[test]
fn missing_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_dir(dir.path(), 1);
    let out = carpipe(dir.path(), &["index", "--set", "paragraphs=absent.jsonl"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.jsonl"));
}

#[test]
fn stats_without_targets_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("carpipe.conf"), "seed = 1\n").unwrap();
    assert_eq!(code(&carpipe(dir.path(), &["stats"])), 1);
}

#[test]
fn training_is_reproducible_and_rerank_checks_the_variant() {
    let dir = retrieved();
    let p = dir.path();
    ok(p, &["train", "--variant", "hi-hf", "--out", "a.json"]);
    ok(p, &["train", "--variant", "hi-hf", "--out", "b.json"]);
    assert_eq!(fs::read(p.join("a.json")).unwrap(), fs::read(p.join("b.json")).unwrap());
    ok(p, &["train", "--variant", "hi-hf", "--seed", "10", "--out", "c.json"]);
    assert_ne!(fs::read(p.join("a.json")).unwrap(), fs::read(p.join("c.json")).unwrap());

    let out = carpipe(
        p,
        &[
            "rerank",
            "--set",
            "checkpoint=a.json",
            "--set",
            "outlines=all.jsonl",
            "--variant",
            "base",
        ],
    );
    assert_eq!(code(&out), 2);
    ok(
        p,
        &[
            "rerank",
            "--set",
            "checkpoint=a.json",
            "--set",
            "outlines=all.jsonl",
            "--variant",
            "hi-hf",
        ],
    );

    let text = fs::read_to_string(p.join("rerank.run")).unwrap();
    assert!(text.lines().all(|l| l.ends_with("-hi-hf")), "tag carries the variant");
}

#[test]
fn judging_everything_makes_both_modes_agree() {
    let dir = retrieved();
    let p = dir.path();
    let qrels = corpus::parse_qrels(&fs::read(p.join("qrels.txt")).unwrap()[..]).unwrap();
    let mut by_query: BTreeMap<String, Vec<ScoredDoc>> = BTreeMap::new();
    for (i, j) in qrels.judgments().enumerate() {
        by_query
            .entry(j.qid.clone())
            .or_default()
            .push(ScoredDoc::new(j.paragraph_id.clone(), (i * 7 % 11) as f64));
    }
    let judged: Run = by_query
        .into_iter()
        .map(|(q, mut r)| {
            r.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then_with(|| a.paragraph_id.cmp(&b.paragraph_id))
            });
            (q, r)
        })
        .collect();
    let mut buf = Vec::new();
    run::write_run(&mut buf, &judged, "judged").unwrap();
    fs::write(p.join("judged.run"), buf).unwrap();

    // Everything after the header line naming the mode.
    let report = |mode| {
        let out = String::from_utf8(ok(p, &["evaluate", "--run", "judged.run", "--mode", mode]).stdout).unwrap();
        out.lines().skip(1).map(String::from).collect::<Vec<_>>()
    };
    let include = report("include");
    assert!(include.iter().any(|l| l.starts_with("map")));
    assert_eq!(include, report("exclude"));
}

#[test]
fn evaluate_and_analyze_write_their_tables() {
    let dir = retrieved();
    let p = dir.path();
    ok(p, &["evaluate", "--run", "bm25.run", "--stratify", "--report", "bm25"]);
    for ext in ["txt", "csv", "means.csv", "strata.txt", "strata.csv"] {
        let f = p.join(format!("bm25.{ext}"));
        assert!(
            fs::metadata(&f).map(|m| m.len() > 0).unwrap_or(false),
            "{}",
            f.display()
        );
    }

    // Every main heading here is unique to its query, so no frequency bin
    // has support; the file still gets its header.
    ok(p, &["analyze", "--set", "outlines=all.jsonl", "--out", "facets"]);
    let bins = fs::read_to_string(p.join("facets/frequency_bins.csv")).unwrap();
    assert_eq!(bins.lines().collect::<Vec<_>>(), ["center,mean_occ,support"]);
}

#[test]
fn analyze_reports_planted_rates() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let planted = common::synth::planted(4);
    write_atomic(&p.join("outlines.jsonl"), |w| {
        corpus::write_outlines(w, &planted.outlines)
    })
    .unwrap();
    write_atomic(&p.join("paragraphs.jsonl"), |w| {
        corpus::write_paragraphs(w, &planted.paragraphs)
    })
    .unwrap();
    write_atomic(&p.join("qrels.txt"), |w| corpus::write_qrels(w, &planted.qrels)).unwrap();
    write_atomic(&p.join("headings.tsv"), |w| {
        tables::write_heading_table(w, &planted.table)
    })
    .unwrap();
    fs::write(
        p.join("carpipe.conf"),
        "outlines = outlines.jsonl\nparagraphs = paragraphs.jsonl\nqrels = qrels.txt\nheadings = headings.tsv\n",
    )
    .unwrap();
    ok(p, &["analyze", "--out", "facets"]);

    let occurrence = fs::read_to_string(p.join("facets/occurrence.csv")).unwrap();
    assert_eq!(occurrence.lines().count(), 1 + 60, "one row per main heading");
    let kde = fs::read_to_string(p.join("facets/kde.csv")).unwrap();
    // Header plus one row per evaluation point for each of the three roles.
    assert_eq!(kde.lines().count(), 1 + 3 * 101);

    let mut rows = csv::Reader::from_path(p.join("facets/frequency_bins.csv")).unwrap();
    let bins: Vec<(f64, f64, usize)> = rows.deserialize().map(Result::unwrap).collect();
    assert!(bins.len() >= 2);
    assert!(bins.windows(2).all(|w| w[0].0 < w[1].0));
    let (first, last) = (bins[0].1, bins[bins.len() - 1].1);
    assert!(first > last, "rare headings occur more often: {first} vs {last}");
}

//! TREC run files: `<qid> Q0 <pid> <rank> <score> <tag>`.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use carpipe_core::eval::Run;
use carpipe_core::retrieval::ScoredDoc;

use super::{check_field, lines, parse_f64, parse_num};
use crate::error::{Error, Result};

/// Rankings are ordered by the rank column; a paragraph may appear once per
/// query.
pub fn parse_run<R: BufRead>(reader: R) -> Result<Run> {
    let mut ranked: std::collections::BTreeMap<String, Vec<(usize, ScoredDoc)>> = Default::default();
    let mut seen = BTreeSet::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let [qid, _q0, pid, rank, score, _tag] = line.split_whitespace().collect::<Vec<_>>()[..] else {
            return Err(Error::parse(n, "expected `qid Q0 pid rank score tag`"));
        };
        let rank: usize = parse_num(n, rank, "rank")?;
        let score = parse_f64(n, score)?;
        if !seen.insert((qid.to_string(), pid.to_string())) {
            return Err(Error::parse(n, format!("paragraph `{pid}` listed twice for `{qid}`")));
        }
        ranked
            .entry(qid.to_string())
            .or_default()
            .push((rank, ScoredDoc::new(pid, score)));
    }
    Ok(ranked
        .into_iter()
        .map(|(qid, mut docs)| {
            docs.sort_by_key(|(r, _)| *r);
            (qid, docs.into_iter().map(|(_, d)| d).collect())
        })
        .collect())
}

pub fn write_run(w: &mut dyn Write, run: &Run, tag: &str) -> Result<()> {
    check_field(tag)?;
    for (qid, ranking) in run {
        check_field(qid)?;
        for (i, d) in ranking.iter().enumerate() {
            check_field(&d.paragraph_id)?;
            writeln!(w, "{qid} Q0 {} {} {:.6} {tag}", d.paragraph_id, i + 1, d.score)?;
        }
    }
    Ok(())
}

//! Paragraph and outline JSON lines, TREC qrels.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use carpipe_core::corpus::{check_grade, Paragraph, Qrels, Query};

use super::{lines, Warn};
use crate::error::{Error, Result};

/// Paragraphs in file order. Anchors missing from their text are reported
/// through `warn` and kept.
pub fn parse_paragraphs_with<R: BufRead>(reader: R, warn: &mut Warn<'_>) -> Result<Vec<Paragraph>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let p: Paragraph = serde_json::from_str(&line).map_err(|e| Error::parse(n, e.to_string()))?;
        p.validate().map_err(|e| Error::parse(n, e.to_string()))?;
        if !seen.insert(p.id.clone()) {
            return Err(Error::parse(n, format!("duplicate paragraph id `{}`", p.id)));
        }
        for anchor in p.missing_anchors() {
            warn(n, format!("anchor `{anchor}` does not occur in paragraph `{}`", p.id));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn parse_paragraphs<R: BufRead>(reader: R) -> Result<Vec<Paragraph>> {
    parse_paragraphs_with(reader, &mut super::log_warning)
}

pub fn write_paragraphs(w: &mut dyn Write, paragraphs: &[Paragraph]) -> Result<()> {
    for p in paragraphs {
        writeln!(w, "{}", serde_json::to_string(p).expect("paragraphs serialize"))?;
    }
    Ok(())
}

pub fn parse_outlines<R: BufRead>(reader: R) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let q: Query = serde_json::from_str(&line).map_err(|e| Error::parse(n, e.to_string()))?;
        q.validate().map_err(|e| Error::parse(n, e.to_string()))?;
        if !seen.insert(q.qid.clone()) {
            return Err(Error::parse(n, format!("duplicate query id `{}`", q.qid)));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn write_outlines(w: &mut dyn Write, outlines: &[Query]) -> Result<()> {
    for q in outlines {
        writeln!(w, "{}", serde_json::to_string(q).expect("queries serialize"))?;
    }
    Ok(())
}

/// `<qid> 0 <paragraph_id> <grade>` per line. A repeated pair keeps the last
/// grade and is reported through `warn`.
pub fn parse_qrels_with<R: BufRead>(reader: R, warn: &mut Warn<'_>) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [qid, _iter, pid, grade] = fields[..] else {
            return Err(Error::parse(n, format!("expected 4 fields, found {}", fields.len())));
        };
        let grade: i32 = grade
            .parse()
            .map_err(|_| Error::parse(n, format!("grade `{grade}` is not an integer")))?;
        check_grade(grade).map_err(|e| Error::parse(n, e.to_string()))?;
        if let Some(old) = qrels
            .insert(qid, pid, grade)
            .map_err(|e| Error::parse(n, e.to_string()))?
        {
            warn(
                n,
                format!("duplicate judgment for ({qid}, {pid}): grade {old} replaced by {grade}"),
            );
        }
    }
    Ok(qrels)
}

pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    parse_qrels_with(reader, &mut super::log_warning)
}

pub fn write_qrels(w: &mut dyn Write, qrels: &Qrels) -> Result<()> {
    for j in qrels.judgments() {
        super::check_field(&j.qid)?;
        super::check_field(&j.paragraph_id)?;
        writeln!(w, "{} 0 {} {}", j.qid, j.paragraph_id, j.grade)?;
    }
    Ok(())
}

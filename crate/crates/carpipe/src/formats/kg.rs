//! Knowledge-graph triples (TSV) and HolE embeddings.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use carpipe_core::kg::{HoleEmbeddings, KnowledgeGraph, Triple};

use super::{lines, parse_f64, parse_num};
use crate::error::{Error, Result};

fn check_name(s: &str) -> Result<()> {
    if s.is_empty() || s.contains(['\t', '\n', '\r']) {
        return Err(Error::Data(format!("name `{s}` is empty or contains a tab or newline")));
    }
    Ok(())
}

/// Triple lines, plus `#entity<TAB>name` and `#relation<TAB>name` lines
/// declaring members that no triple uses.
pub fn parse_graph<R: BufRead>(reader: R) -> Result<KnowledgeGraph> {
    let (mut triples, mut entities, mut relations) = (Vec::new(), Vec::new(), Vec::new());
    for item in lines(reader) {
        let (n, line) = item?;
        match line.split('\t').collect::<Vec<_>>()[..] {
            ["#entity", e] => entities.push(e.to_string()),
            ["#relation", r] => relations.push(r.to_string()),
            [s, r, o] => triples.push(Triple::new(s, r, o)),
            _ => return Err(Error::parse(n, "expected `subject<TAB>relation<TAB>object`")),
        }
    }
    Ok(KnowledgeGraph::from_parts(entities, relations, triples)?)
}

pub fn write_graph(w: &mut dyn Write, graph: &KnowledgeGraph) -> Result<()> {
    let used_e: BTreeSet<&str> = graph
        .triples()
        .flat_map(|t| [t.subject.as_str(), t.object.as_str()])
        .collect();
    let used_r: BTreeSet<&str> = graph.triples().map(|t| t.relation.as_str()).collect();
    for e in graph.entities().filter(|e| !used_e.contains(e)) {
        check_name(e)?;
        writeln!(w, "#entity\t{e}")?;
    }
    for r in graph.relations().filter(|r| !used_r.contains(r)) {
        check_name(r)?;
        writeln!(w, "#relation\t{r}")?;
    }
    for t in graph.triples() {
        for f in [&t.subject, &t.relation, &t.object] {
            check_name(f)?;
        }
        writeln!(w, "{}\t{}\t{}", t.subject, t.relation, t.object)?;
    }
    Ok(())
}

/// Names may contain spaces: the last `d` fields of a line are the vector
/// and everything between the tag and them is the name.
pub fn parse_hole<R: BufRead>(reader: R) -> Result<HoleEmbeddings> {
    let mut it = lines(reader);
    let (n, header) = it
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(1, "missing HOLE header"))?;
    let [tag, d, ne, nr] = header.split_whitespace().collect::<Vec<_>>()[..] else {
        return Err(Error::parse(n, "expected `HOLE <d> <n_entities> <n_relations>`"));
    };
    if tag != "HOLE" {
        return Err(Error::parse(n, "expected `HOLE <d> <n_entities> <n_relations>`"));
    }
    let d: usize = parse_num(n, d, "dimension")?;
    let (ne, nr): (usize, usize) = (parse_num(n, ne, "entity count")?, parse_num(n, nr, "relation count")?);
    let mut emb = HoleEmbeddings::new(d)?;
    let (mut seen_e, mut seen_r) = (0, 0);
    for item in it {
        let (n, line) = item?;
        let mut parts: Vec<&str> = line.rsplitn(d + 1, ' ').collect();
        if parts.len() != d + 1 {
            return Err(Error::parse(n, format!("expected a tag, a name and {d} values")));
        }
        let head = parts.pop().expect("d + 1 parts");
        let v = parts
            .iter()
            .rev()
            .map(|f| parse_f64(n, f))
            .collect::<Result<Vec<f64>>>()?;
        let result = match head.split_once(' ') {
            Some(("E", name)) if !name.is_empty() => {
                seen_e += 1;
                emb.insert_entity(name, v)
            }
            Some(("R", name)) if !name.is_empty() => {
                seen_r += 1;
                emb.insert_relation(name, v)
            }
            _ => return Err(Error::parse(n, "expected `E <entity> …` or `R <label> …`")),
        };
        result.map_err(|e| Error::parse(n, e.to_string()))?;
    }
    if (seen_e, seen_r) != (ne, nr) || emb.entities().count() != ne || emb.relations().count() != nr {
        return Err(Error::Data(format!(
            "header declares {ne} entities and {nr} relations, found {seen_e} and {seen_r} distinct lines"
        )));
    }
    Ok(emb)
}

pub fn write_hole(w: &mut dyn Write, emb: &HoleEmbeddings) -> Result<()> {
    writeln!(
        w,
        "HOLE {} {} {}",
        emb.dim(),
        emb.entities().count(),
        emb.relations().count()
    )?;
    let rows = emb
        .entities()
        .map(|r| ("E", r))
        .chain(emb.relations().map(|r| ("R", r)));
    for (tag, (name, v)) in rows {
        check_name(name)?;
        write!(w, "{tag} {name}")?;
        for x in v {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

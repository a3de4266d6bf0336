//! Word embeddings (`token v1 … vd`) and IDF tables (`N <n>` then `token df`).

use std::io::{BufRead, Write};

use carpipe_core::text::{EmbeddingTable, IdfTable};

use super::{check_field, lines, parse_f64, parse_num};
use crate::error::{Error, Result};

/// An optional `count dim` first line is accepted when both fields are
/// integers and the dimension agrees with the vectors that follow.
pub fn parse_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingTable> {
    let mut rows: Vec<(usize, String)> = lines(reader).collect::<Result<_>>()?;
    let mut declared: Option<(usize, usize)> = None;
    if let Some((_, first)) = rows.first() {
        let f: Vec<&str> = first.split_whitespace().collect();
        if let [count, dim] = f[..] {
            if let (Ok(count), Ok(dim)) = (count.parse::<usize>(), dim.parse::<usize>()) {
                let next_dim = rows.get(1).map(|(_, l)| l.split_whitespace().count() - 1);
                if next_dim.is_none_or(|d| d == dim) {
                    declared = Some((count, dim));
                    rows.remove(0);
                }
            }
        }
    }
    let Some((first_line, first)) = rows.first() else {
        return Err(Error::parse(1, "no embedding vectors"));
    };
    let dim = first.split_whitespace().count() - 1;
    if dim == 0 {
        return Err(Error::parse(*first_line, "vector has no components"));
    }
    let mut table = EmbeddingTable::new(dim)?;
    for (n, line) in &rows {
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-blank line");
        let v = fields.map(|f| parse_f64(*n, f)).collect::<Result<Vec<f64>>>()?;
        if v.len() != dim {
            return Err(Error::parse(
                *n,
                format!("vector for `{token}` has {} components, expected {dim}", v.len()),
            ));
        }
        table.insert(token, v).map_err(|e| Error::parse(*n, e.to_string()))?;
    }
    if let Some((count, d)) = declared {
        if d != dim {
            return Err(Error::parse(
                1,
                format!("header declares dimension {d}, vectors have {dim}"),
            ));
        }
        if count != rows.len() {
            log::warn!("embedding header declares {count} vectors, found {}", rows.len());
        }
    }
    Ok(table)
}

pub fn write_embeddings(w: &mut dyn Write, table: &EmbeddingTable) -> Result<()> {
    writeln!(w, "{} {}", table.len(), table.dim())?;
    for (token, v) in table.iter() {
        check_field(token)?;
        write!(w, "{token}")?;
        for x in v {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn parse_idf<R: BufRead>(reader: R) -> Result<IdfTable> {
    let mut it = lines(reader);
    let (n, header) = it
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(1, "missing `N <n_docs>` header"))?;
    let n_docs = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["N", v] => parse_num::<u32>(n, v, "document count")?,
        _ => return Err(Error::parse(n, "expected `N <n_docs>` header")),
    };
    let mut counts = Vec::new();
    for item in it {
        let (n, line) = item?;
        let [token, df] = line.split_whitespace().collect::<Vec<_>>()[..] else {
            return Err(Error::parse(n, "expected `token df`"));
        };
        counts.push((token.to_string(), parse_num::<u32>(n, df, "document frequency")?));
    }
    Ok(IdfTable::from_counts(n_docs, counts)?)
}

pub fn write_idf(w: &mut dyn Write, table: &IdfTable) -> Result<()> {
    writeln!(w, "N {}", table.n_docs())?;
    for (token, df) in table.iter() {
        writeln!(w, "{token} {df}")?;
    }
    Ok(())
}

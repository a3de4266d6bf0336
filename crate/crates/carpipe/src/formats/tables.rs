//! Heading-frequency table: `heading<TAB>freq` per line.

use std::io::{BufRead, Write};

use carpipe_core::facets::HeadingFrequencyTable;

use super::{lines, parse_num};
use crate::error::{Error, Result};

pub fn parse_heading_table<R: BufRead>(reader: R) -> Result<HeadingFrequencyTable> {
    let mut counts = Vec::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let Some((heading, freq)) = line.rsplit_once('\t') else {
            return Err(Error::parse(n, "expected `heading<TAB>freq`"));
        };
        counts.push((heading.to_string(), parse_num::<u32>(n, freq.trim(), "frequency")?));
    }
    Ok(HeadingFrequencyTable::from_counts(counts)?)
}

pub fn write_heading_table(w: &mut dyn Write, table: &HeadingFrequencyTable) -> Result<()> {
    for (heading, freq) in table.iter() {
        if heading.contains(['\t', '\n', '\r']) {
            return Err(Error::Data(format!("heading `{heading}` contains a tab or newline")));
        }
        writeln!(w, "{heading}\t{freq}")?;
    }
    Ok(())
}

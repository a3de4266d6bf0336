//! BM25 index as a single JSON document.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use carpipe_core::retrieval::{InvertedIndex, Posting};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INDEX_FORMAT: &str = "carpipe-index";
pub const INDEX_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<Posting>>,
}

pub fn write_index(w: &mut dyn Write, index: &InvertedIndex) -> Result<()> {
    let file = IndexFile {
        format: INDEX_FORMAT.into(),
        version: INDEX_VERSION,
        ids: index.ids().to_vec(),
        doc_lengths: index.doc_lengths().to_vec(),
        postings: index.terms().map(|(t, p)| (t.to_string(), p.to_vec())).collect(),
    };
    serde_json::to_writer(&mut *w, &file).map_err(|e| Error::Data(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn parse_index<R: Read>(reader: R) -> Result<InvertedIndex> {
    let file: IndexFile = serde_json::from_reader(reader).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    if file.format != INDEX_FORMAT || file.version != INDEX_VERSION {
        return Err(Error::Data(format!(
            "unsupported index format {} v{}",
            file.format, file.version
        )));
    }
    Ok(InvertedIndex::from_parts(file.ids, file.doc_lengths, file.postings)?)
}

//! Versioned ranker checkpoint: configuration plus named row-major arrays.

use std::io::{Read, Write};

use carpipe_core::ranker::{RankerConfig, RankerParams};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "carpipe-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NamedArray {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: RankerConfig,
    params: Vec<NamedArray>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RankerConfig,
    pub params: RankerParams,
}

pub fn write_checkpoint(w: &mut dyn Write, config: &RankerConfig, params: &RankerParams) -> Result<()> {
    if !params.is_finite() {
        return Err(Error::Data("refusing to save non-finite parameters".into()));
    }
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: config.clone(),
        params: params
            .named()
            .into_iter()
            .map(|(name, t)| NamedArray {
                name,
                shape: t.shape.clone(),
                values: t.data.clone(),
            })
            .collect(),
    };
    serde_json::to_writer(&mut *w, &file).map_err(|e| Error::Data(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn parse_checkpoint<R: Read>(reader: R) -> Result<Checkpoint> {
    let file: CheckpointFile = serde_json::from_reader(reader).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    if file.format != CHECKPOINT_FORMAT {
        return Err(Error::Data(format!("not a checkpoint (format `{}`)", file.format)));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {}", file.version)));
    }
    let arrays = file.params.into_iter().map(|a| (a.name, a.shape, a.values)).collect();
    let params = RankerParams::from_named(&file.config, arrays)?;
    Ok(Checkpoint {
        config: file.config,
        params,
    })
}

//! File formats, IO and the command-line pipeline.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod fsutil;
pub mod pipeline;

pub use error::{Error, Result};

#![allow(clippy::needless_range_loop)]
//! Facet-aware neural reranking for complex answer retrieval.
//!
//! This crate holds the allocation-only algorithmic core: the data model,
//! tokenization and IDF statistics, BM25 retrieval, heading-utility
//! estimators, the entity knowledge graph with holographic embeddings, the
//! PACRR-style matcher with analytic gradients, and TREC-style evaluation.
//! Everything that touches files or the command line lives in the `carpipe`
//! crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod error;
pub mod eval;
pub mod facets;
pub mod kg;
pub mod math;
pub mod ranker;
pub mod retrieval;
pub mod text;

pub use error::{Error, Result};

//! Heading-labelled entity graph and holographic (HolE) embeddings.
//!
//! Nodes are article topics and the entities their relevant paragraphs link
//! to; an edge `(topic, label, mention)` is labelled with the lemmatized head
//! of the query's highest-level non-title heading. Embeddings trained on this
//! graph give, for a paragraph being ranked, a similarity between the query
//! topic and each mentioned entity *in the context of the heading*.

mod graph;
mod hole;

pub use graph::*;
pub use hole::*;

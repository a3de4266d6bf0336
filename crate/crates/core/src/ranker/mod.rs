//! PACRR-style matcher with heading-utility extensions.
//!
//! The matching phase convolves square filters over a query × document
//! similarity matrix, keeps the strongest filter per position, and k-max
//! pools each query row. Pooled rows are concatenated with the token IDF and
//! (optionally) the heading-position and heading-frequency contextual
//! vectors, then a small dense network produces the relevance score.
//!
//! With heading independence the query is split into title, intermediate
//! and main segments of fixed capacity. Each segment has its own filters and
//! its own dense layer, so main-heading features always land in the same
//! positions regardless of how long the title is. Knowledge-graph entity
//! scores, when enabled, join at the combination layer.

mod config;
mod features;
mod model;
mod params;
mod train;

pub use config::*;
pub use features::*;
pub use model::*;
pub use params::*;
pub use train::*;

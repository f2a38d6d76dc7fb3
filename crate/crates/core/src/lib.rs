//! Detection of coordinated inauthentic activity in multi-platform social
//! media data.
//!
//! The pipeline builds co-URL similarity networks from TF-IDF user vectors,
//! dismantles them with a density-guided grid search over edge-weight and
//! centrality quantiles, detects content amplification through windowed text
//! similarity, and characterizes the detected cohorts.

pub mod analyze;
pub mod corpus;
pub mod dismantle;
pub mod error;
pub mod pipeline;
pub mod simgraph;
pub mod spectral;
pub mod synth;
pub mod tsn;
pub mod vectorize;

pub use corpus::{AccountKey, Post, UrlExpansionTable};
pub use dismantle::{DismantleResult, GridCell, GridSurface, ThresholdPolicy};
pub use error::{Error, Result};
pub use simgraph::{Edge, PairMode, SimilarityGraph};

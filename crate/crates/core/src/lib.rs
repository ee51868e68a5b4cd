//! Annotator-aware dataset cartography.
//!
//! Train text classifiers against majority-vote labels (Single-GT) or raw
//! per-annotator labels (Multi-GT), record per-epoch training dynamics,
//! build data maps, and analyse how confidence relates to annotator
//! agreement.

pub mod analysis;
pub mod cli;
pub mod cartography;
pub mod corpus;
pub mod error;
pub mod featurizer;
pub mod format;
pub mod models;
pub mod stats;
pub mod synthgen;

pub use error::{Error, Result};

//! Exploratory analysis of binary ("yes"/"no") questionnaire data.
//!
//! The crate covers the whole workflow: loading and validating response
//! matrices, ranking answers by Bernoulli variance, clustering answers and
//! respondents, choosing the number of clusters with internal validity
//! indices, monothetic decision trees, pairwise rule mining with the signed
//! conversion rate, segment comparisons, and deterministic SVG charts.

pub mod charts;
pub mod cluster;
pub mod corpus;
pub mod error;
pub mod monothetic;
pub mod points;
pub mod rng;
pub mod rules;
pub mod stats;
pub mod stratify;
pub mod validity;

pub use error::{Error, Result};

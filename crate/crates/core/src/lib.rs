//! Context-aware detection of noisy labels for batch-incremental active learning.
//!
//! Labels queried from an annotator are checked against co-occurrence
//! context: for each queried instance a star-shaped graph of its linked
//! instances and attributes is built, exact conditional inference yields
//! posterior class-conditional relations, and their divergence from the
//! relations learned on trusted data scores how likely the label is wrong.

pub mod baselines;
pub mod classifier;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod harness;
pub mod inference;
pub mod matrix;
pub mod metrics;
pub mod noise;
pub mod prob;
pub mod relationship;
pub mod rng;

pub use error::{Error, Result};

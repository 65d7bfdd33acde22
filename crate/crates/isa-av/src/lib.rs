//! Instance-space analysis for autonomous-vehicle test suites.
//!
//! The pipeline: extract scenario features ([`extraction`]), normalise and
//! prune them ([`preprocess`]), pick the subset that best separates safe
//! from unsafe runs ([`selection`]), fit a 2D linear projection ([`pilot`]),
//! measure how much of the reachable space a suite covers ([`geometry`]),
//! and train classifiers that predict outcomes without simulation
//! ([`prediction`]). [`pipeline`] chains the stages and [`cli`] exposes
//! them as subcommands.

pub mod cli;
pub mod error;
pub mod extraction;
pub mod geometry;
pub mod metadata;
pub mod pilot;
pub mod pipeline;
pub mod plot;
pub mod prediction;
pub mod preprocess;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
pub use metadata::{load_metadata, save_metadata, MetadataTable, Outcome};

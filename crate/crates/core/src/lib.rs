//! Agent-based simulation of hashtag cascades over a weighted, reciprocal
//! social network.
//!
//! Three diffusion mechanisms are modeled: network plus identity, network
//! only (identity similarity terms fixed at one), and identity only (the same
//! dynamics on a degree-preserving random rewiring of the network). Per-hashtag
//! stickiness is calibrated to an observed cascade size, and simulated
//! cascades are scored against observed ones with ten comparison metrics that
//! are pooled into a composite Cascade Match Index.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: network storage, edge-list IO, configuration-model rewiring,
//!   centralities, communities, distances.
//! - [`identity`]: identity vectors, hashtag identity inference, similarity
//!   terms.
//! - [`engine`]: the stochastic usage simulator.
//! - [`calibrate`]: nested grid search for stickiness.
//! - [`metrics`]: the ten cascade-comparison metrics and their primitives.
//! - [`cmi`]: pooled z-scoring into the composite index.
//! - [`experiment`]: trials, covariates, interaction regression and model
//!   selection.
//! - [`worldio`]: synthetic worlds, planted cascades and on-disk formats.
//! - [`cli`]: the `cascadelab` command-line front end.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibrate;
pub mod cli;
pub mod cmi;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod identity;
pub mod metrics;
pub mod seeds;
pub mod worldio;

pub use error::{Error, Result};

//! Positive-unlabeled illicit node detection on transaction graphs.
//!
//! The pipeline: ingest or synthesise a [`graph::TransactionGraph`], sample
//! seed subnetworks, embed nodes ([`embed`]), fit baseline or PU classifiers
//! ([`classify`], [`pu`]) on observed labels, and score them with metrics
//! that stay meaningful when unlabeled nodes hide positives ([`metrics`]).
//! [`harness`] wires these into the hidden-positive sweep and the
//! embedding × model benchmark.

pub mod classify;
pub mod embed;
pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod pu;
pub mod rng;

mod par;

pub use error::{Error, Result};

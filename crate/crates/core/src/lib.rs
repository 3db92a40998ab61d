//! Statevector simulation of single-qubit noise acting on quantum binary
//! classifiers.
//!
//! The crate provides a dense simulator ([`statevec`]), the bit-flip and
//! coherent rotation channels ([`noise`]), the first-qubit margin classifier
//! ([`classifier`]), exact and Monte Carlo channel averaging together with
//! the invariance and interval checks built on them ([`analysis`]), and the
//! risk/penalty machinery for training on corrupted quantum data
//! ([`training`]).

pub mod analysis;
pub mod classifier;
pub mod dataset_io;
pub mod error;
pub mod gates;
pub mod noise;
pub mod rng;
pub mod statevec;
pub mod training;

pub use error::{Error, Result};

/// Library version, embedded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Random-walk spanning-tree laboratory.
//!
//! This crate implements a family of random-walk algorithms that sample
//! spanning trees of finite connected graphs — Aldous-Broder, Wilson's
//! algorithm (with optional initial conditions), an urn-based sampler for
//! complete graphs, a hybrid scheme, an edge-started variant of Wilson, and
//! a seeded sampler biased by sub-tree counts — together with the stopping
//! time and branch decompositions of the walks that drive them.
//!
//! Around the generators sit three supporting layers:
//!
//! * [`branch_stats`] — closed-form branch-length distributions on complete
//!   graphs, the associated absorbing/lumped Markov chains, and extraction of
//!   branch records from recorded walk traces;
//! * [`exact_oracles`] — deterministic ground truth: spanning-tree counts via
//!   the matrix-tree theorem, exhaustive tree enumeration, hitting-time
//!   statistics, and identity checks used to validate the samplers;
//! * [`harness`] — reproducible experiments (step counts, uniformity,
//!   first-branch probabilities) with seeded parallel replicas and CSV output.
//!
//! All randomness flows through explicitly seeded ChaCha streams so that any
//! experiment re-run with the same seed produces byte-identical output.

pub mod branch_stats;
pub mod exact_oracles;
pub mod graph;
pub mod harness;
pub mod rng_walk;
pub mod ust_algorithms;

use thiserror::Error;

/// Errors produced by graph construction, algorithm preconditions, and I/O.
#[derive(Debug, Error)]
pub enum UstError {
    /// Malformed or unusable graph input (parse errors, duplicate edges,
    /// nonpositive weights, disconnected input).
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    /// A parameter outside an operation's domain (bad family parameters,
    /// out-of-range vertex ids, unmet algorithm preconditions).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    /// A numerical routine could not produce a trustworthy answer
    /// (ill-conditioned weighted determinant, non-convergent solve).
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// Underlying I/O failure while reading or writing files.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, UstError>;

//! Functional-caching toolkit for erasure-coded storage clusters.
//!
//! Given a cluster of queueing storage nodes and a set of erasure-coded files,
//! this crate computes an analytic upper bound on mean file-retrieval latency
//! under probabilistic chunk scheduling, jointly optimizes per-file cache
//! allocations and scheduling probabilities against a shared cache budget,
//! constructs the extra cached chunks as an extension of each file's MDS code,
//! and validates plans with a discrete-event fork-join queueing simulator.

pub mod coding;
pub mod latency;
pub mod model;
pub mod optimizer;
pub mod scenarios;
pub mod simulator;

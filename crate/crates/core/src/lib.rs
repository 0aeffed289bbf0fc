//! Label-propagation guided global node-injection attacks on graph neural
//! networks, end to end: graph ingestion and synthesis, surrogate GCN/SGC
//! training, label-propagation smoothing, victim scoring and clustering,
//! malicious-feature synthesis, and evasion/poisoning evaluation.
//!
//! The attack wires a handful of fake nodes into a homophilous graph so that
//! each victim's prediction tips toward its target label (the runner-up
//! class of the smoothed prediction), then measures the damage against
//! freshly trained victims.

pub mod baselines;
pub mod dense;
pub mod error;
pub mod eval;
pub mod graph;
pub mod injector;
pub mod propagation;
pub mod scoring;
pub mod seed;
pub mod sparse;
pub mod surrogate;

pub use error::{Error, Result};

//! Deterministic Monte Carlo simulation of NoSQL schema evolution.
//!
//! A run evolves a versioned entity population (Player, Mission, Place) over
//! a series of releases. Each release serves a workload of entity accesses,
//! applies one schema modification operation (SMO) and lets a migration
//! strategy decide which legacy entities to migrate. I/O requests are
//! counted, converted to cloud charges and paired with a parametric latency
//! model. Batches of seeded runs are summarized with box-plot statistics and
//! checked against a catalog of invariants.

pub mod cli;
pub mod costing;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod invariants;
pub mod montecarlo;
pub mod rng;
pub mod simulator;
pub mod store;
pub mod strategies;
pub mod workload;

pub use error::{Error, Result};

/// Version embedded in persisted artifacts.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

//! Monte Carlo harness for the rate-splitting ISAC optimizer: experiment
//! configuration, seeded sweeps, plot-data output and channel-model checks.

pub mod config;
pub mod experiment;
pub mod output;
pub mod stats;
pub mod validate;

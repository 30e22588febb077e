//! Experiment driver over the rig-core library: JSON-configured complexity
//! sweeps, bound-coverage runs and excess-risk rate sweeps, emitted as CSV.

pub mod config;
pub mod csv;
pub mod error;
pub mod runner;

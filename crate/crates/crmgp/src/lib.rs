//! Experiment harness for consensus-based recursive multi-output GPs: TOML
//! configuration, a lockstep network simulator with cost ledger, the model suite
//! on the synthetic wind field, and CSV outputs.

pub mod config;
pub mod csvio;
mod error;
pub mod experiment;
pub mod netsim;

pub use error::{Result, RunError};

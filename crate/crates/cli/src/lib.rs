//! Experiment harness for `gossip-core`: configuration documents, seeded
//! batch runs fanned out across threads, trace/summary output and bound
//! tables. The `gossip-sim` binary is a thin front end over [`commands`].

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod stats;

pub use commands::{cmd_bounds, cmd_graph, cmd_run, run_experiment, summarize};
pub use config::{Experiment, ExperimentConfig};
pub use error::HarnessError;

//! Experiment harness and command-line front end for `gbnlearn`.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod output;
pub mod summary;

pub use config::{ExperimentConfig, GraphSpec, MethodSpec, Scenario};
pub use error::{BenchError, Result};
pub use harness::{run_experiment, ResultRow};
pub use summary::{summarize, SummaryRow};

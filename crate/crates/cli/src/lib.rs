//! Command-line surface for scoring, retrieval, evaluation, calibration and
//! chunk-budget sweeps. The `cmd_*` functions are usable as a library with
//! any [`Scorer`](longfact_core::Scorer); the binary wires them to flags.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;

pub use commands::{cmd_bench, cmd_calibrate, cmd_evaluate, cmd_retrieve, cmd_score};
pub use config::RunConfig;
pub use error::CliError;
pub use report::Envelope;

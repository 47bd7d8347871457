//! Library side of the `molphase` command-line tool.
//!
//! Exit codes: 0 on success, 1 when the oracle comparison disagrees, 2 for
//! usage and input errors.

pub mod angle;
pub mod commands;

use thiserror::Error;

pub use commands::{
    cmd_oracle, cmd_qasm, cmd_run, cmd_sweep, cmd_vibronic, default_grid, GaugeChoice, OracleConfig, OracleReport,
    OutputFormat, RunConfig,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] molphase_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_DISAGREE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

//! Experiment driver: builds reduced models per configuration and writes error curves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod evaluate;
pub mod gridinfo;
pub mod run;

use wrom::RomError;

pub use config::{ExperimentConfig, Method};
pub use run::{run, Manifest, RunOutcome};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BREAKDOWN: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config rejected: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Rom(#[from] RomError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => EXIT_CONFIG,
            CliError::Rom(RomError::SingularReducedSystem { .. }) => EXIT_BREAKDOWN,
            _ => 1,
        }
    }
}

/// Shortest round-trip representation, used for every float written to CSV.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

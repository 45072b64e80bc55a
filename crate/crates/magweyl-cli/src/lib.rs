//! Scenario runner for the magweyl library: configuration, checks, reports and plots.

pub mod checks;
pub mod config;
pub mod criteria;
pub mod plot;
pub mod report;
pub mod scenarios;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Run(#[from] magweyl::MagweylError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for configuration problems, 1 for anything that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

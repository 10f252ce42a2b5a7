//! Batch front end for `sbary`: JSON run configurations, output files and
//! the flat `key=value` report.

pub mod commands;
pub mod config;
pub mod heatmap;
pub mod report;
pub mod run;

use thiserror::Error;

pub use config::RunConfig;
pub use report::Report;
pub use run::{run, run_config, Outcome, SolveOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_UNVERIFIED: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] sbary::Error),
    /// Raised once the solver has started.
    #[error("solve failed: {0}")]
    Solve(sbary::Error),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solve(_) => EXIT_NOT_CONVERGED,
            _ => EXIT_INPUT,
        }
    }
}

pub(crate) fn write_file(path: &std::path::Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

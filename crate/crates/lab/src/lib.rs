//! Config-driven experiment runner on top of `nodal-core`: ensembles of
//! restricted eigenfunctions, per-cell metrics, tolerance checks, result
//! files and SVG plots.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod output;
pub mod plot;

pub use config::{ExperimentConfig, ExperimentKind, FieldError};
pub use experiment::{run_experiment, Run};
pub use output::{inputs_hash, read_results, write_results, ResultRecord};
pub use plot::emit_plots;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid configuration:\n{}", format_fields(.0))]
    ConfigInvalid(Vec<FieldError>),
    #[error("io: {0}")]
    Io(String),
    #[error("missing data: {0}")]
    MissingData(String),
}

fn format_fields(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

/// Thread count requested through `LAB_THREADS`, if set to a positive integer.
pub fn requested_threads() -> Option<usize> {
    std::env::var("LAB_THREADS").ok()?.trim().parse().ok().filter(|n| *n > 0)
}

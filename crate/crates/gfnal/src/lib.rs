//! Experiment harness around `gfnal-core`: spec files, result files,
//! checkpoints and the `gfnal` command line.

use std::path::PathBuf;

pub mod checkpoint;
pub mod cli;
pub mod report;
pub mod sanity;
pub mod spec;

pub use checkpoint::{Checkpoint, Payload, CHECKPOINT_VERSION};
pub use report::{run_experiment, run_to_dir, summarize, write_rounds_csv, RunOutcome, RunSummary, Summary};
pub use sanity::{gfn_sanity, SanityReport};
pub use spec::ExperimentSpec;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad spec, matrix or argument.
    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Runtime(gfnal_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// 2 for invalid input, 1 for anything that failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invalid(_) => 2,
            _ => 1,
        }
    }
}

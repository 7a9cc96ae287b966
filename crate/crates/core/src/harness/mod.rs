//! Config-driven experiment runner.
//!
//! A run evaluates every seed of an [`ExperimentConfig`]: datasets are
//! generated or loaded, masked, interleaved onto the shared delay loop,
//! simulated, split back per task, and scored by per-task readouts. The
//! train and test phases each build their own slot schedule, since task
//! shares may differ between phases; node counts stay at their train-phase
//! values and only the slot timing changes.

mod config;
pub mod protocols;
mod report;
mod run;
mod sweep;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    derive_seed, ExperimentConfig, ReadoutConfig, TaskConfig, TaskSource, TimingConfig, DEFAULT_SEED_COUNT,
    DEFAULT_WASHOUT,
};
pub use report::{report, ReportSummary, SummaryRow};
pub use run::{
    build_dataset, run_experiment, run_experiment_with, simulate_seed, write_record, ResultRecord, SeedMetric,
    SeedOutcome, TaskOutcome, TaskResult, Timing, SCHEMA_VERSION,
};
pub use sweep::{expand_grid, run_sweep, SweepGrid, SweepOutcome, SweepStatus};

use crate::metrics::MetricError;
use crate::readout::ReadoutError;
use crate::reservoir::ReservoirError;
use crate::tasks::TaskError;
use crate::tdm::{TaskId, TdmError};

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Data,
    Train,
    Test,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Data => "data",
            Phase::Train => "train",
            Phase::Test => "test",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Tasks(#[from] TaskError),
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
    #[error(transparent)]
    Tdm(#[from] TdmError),
    #[error(transparent)]
    Readout(#[from] ReadoutError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{phase} phase{}: {source}", task.as_ref().map(|t| format!(", task `{t}`")).unwrap_or_default())]
    Stage {
        task: Option<TaskId>,
        phase: Phase,
        #[source]
        source: StageError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Report(String),
}

impl HarnessError {
    pub(crate) fn stage(task: Option<&TaskId>, phase: Phase, source: impl Into<StageError>) -> Self {
        HarnessError::Stage {
            task: task.cloned(),
            phase,
            source: source.into(),
        }
    }

    /// Process exit code: 1 config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Io { .. } | HarnessError::Report(_) => 2,
            HarnessError::Stage {
                source: StageError::Tasks(_),
                ..
            } => 2,
            HarnessError::Stage { .. } => 3,
        }
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{run_experiment_with, write_atomic, write_record};
use super::HarnessError;
use crate::exec::Execution;

/// Parameter axes of a sweep. Empty axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub phi: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    /// Sample period in slots; node counts follow from the shares.
    #[serde(default)]
    pub sample_slots: Vec<usize>,
}

impl SweepGrid {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(format!("grid: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        [
            self.alpha.len(),
            self.beta.len(),
            self.phi.len(),
            self.lambda.len(),
            self.sample_slots.len(),
        ]
        .iter()
        .map(|&n| n.max(1))
        .product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn axis<T: Copy>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Cartesian product of the grid over `base`, alpha varying slowest.
pub fn expand_grid(base: &ExperimentConfig, grid: &SweepGrid) -> Vec<ExperimentConfig> {
    let mut out = Vec::with_capacity(grid.len());
    for &alpha in &axis(&grid.alpha, base.reservoir.alpha) {
        for &beta in &axis(&grid.beta, base.reservoir.beta) {
            for &phi in &axis(&grid.phi, base.reservoir.phi) {
                for &lambda in &axis(&grid.lambda, base.readout.lambda) {
                    for &slots in &axis(&grid.sample_slots, base.timing.sample_slots) {
                        let mut c = base.clone();
                        c.reservoir.alpha = alpha;
                        c.reservoir.beta = beta;
                        c.reservoir.phi = phi;
                        if !grid.lambda.is_empty() {
                            c.readout.lambda = lambda;
                            c.readout.lambda_grid = None;
                        }
                        if !grid.sample_slots.is_empty() {
                            c.timing.sample_slots = slots;
                            c.timing.tau_slots = None;
                        }
                        out.push(c);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepStatus {
    Completed(PathBuf),
    /// A record with the same digest was already present.
    Skipped(PathBuf),
    Failed {
        path: PathBuf,
        message: String,
        exit_code: i32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub points: Vec<(String, SweepStatus)>,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.points
            .iter()
            .filter(|(_, s)| matches!(s, SweepStatus::Failed { .. }))
            .count()
    }
}

#[derive(Serialize)]
struct FailureRecord<'a> {
    digest: &'a str,
    error: String,
    exit_code: i32,
    config: &'a ExperimentConfig,
}

/// Runs every grid point, writing one record per point into `out_dir` as it
/// finishes. Points whose record already exists are skipped, so an
/// interrupted sweep resumes where it stopped. A failing point is recorded
/// as `<digest>.failed.json` and the sweep moves on.
pub fn run_sweep(
    base: &ExperimentConfig,
    grid: &SweepGrid,
    out_dir: &Path,
    exec: Execution,
) -> Result<SweepOutcome, HarnessError> {
    let mut points = Vec::with_capacity(grid.len());
    for cfg in expand_grid(base, grid) {
        let digest = cfg.digest();
        let done = out_dir.join(format!("{digest}.json"));
        if done.is_file() {
            points.push((digest, SweepStatus::Skipped(done)));
            continue;
        }
        let status = match run_experiment_with(&cfg, exec) {
            Ok(record) => SweepStatus::Completed(write_record(&record, out_dir)?),
            Err(e @ HarnessError::Io { .. }) => return Err(e),
            Err(e) => {
                let failure = FailureRecord {
                    digest: &digest,
                    error: e.to_string(),
                    exit_code: e.exit_code(),
                    config: &cfg,
                };
                let bytes = serde_json::to_vec_pretty(&failure).expect("failure serializes");
                let path = write_atomic(out_dir, &format!("{digest}.failed.json"), &bytes)?;
                SweepStatus::Failed {
                    path,
                    message: e.to_string(),
                    exit_code: e.exit_code(),
                }
            }
        };
        points.push((digest, status));
    }
    Ok(SweepOutcome { points })
}

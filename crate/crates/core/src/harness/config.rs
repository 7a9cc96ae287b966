//! Experiment configuration (TOML) and its stable digest.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::readout::DEFAULT_LAMBDA;
use crate::reservoir::{MaskMode, ReservoirParams};
use crate::tasks::{ChannelBoundary, ChannelModel, SyntheticDigits, TaskKind, DIGIT_CLASSES};
use crate::tdm::{PadPolicy, Share, TaskId, GAP_SLOTS};

pub const DEFAULT_SEED_COUNT: u64 = 10;
pub const DEFAULT_WASHOUT: usize = 100;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.2;
pub const DEFAULT_SINE_PERIOD: f64 = 12.7;

fn default_seeds() -> Vec<u64> {
    (0..DEFAULT_SEED_COUNT).collect()
}

fn default_washout() -> usize {
    DEFAULT_WASHOUT
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_validation_fraction() -> f64 {
    DEFAULT_VALIDATION_FRACTION
}

fn default_horizon() -> usize {
    1
}

fn default_scale() -> f64 {
    1.0
}

fn default_sine_period() -> f64 {
    DEFAULT_SINE_PERIOD
}

/// Slot counts in units of the node period `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    /// `T_sample / h`: slots available to task nodes per macro step.
    pub sample_slots: usize,
    /// `tau / h`; defaults to `sample_slots + 2(k - 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_slots: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// When set, the penalty is chosen from this grid on a validation split
    /// of the training rows and `lambda` is ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            lambda_grid: None,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
        }
    }
}

/// Where a task's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSource {
    Narma {},
    Channel {
        /// `None` disables noise.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snr_db: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadratic: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cubic: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary: Option<ChannelBoundary>,
    },
    SantaFe {
        path: PathBuf,
        #[serde(default = "default_horizon")]
        horizon: usize,
    },
    Sine {
        #[serde(default = "default_sine_period")]
        period: f64,
        #[serde(default = "default_horizon")]
        horizon: usize,
    },
    SpokenDigit {
        path: PathBuf,
    },
    SyntheticDigit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        classes: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        utterances_per_class: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frames_per_utterance: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
}

impl TaskSource {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskSource::Narma {} => TaskKind::Narma,
            TaskSource::Channel { .. } => TaskKind::Channel,
            TaskSource::SantaFe { .. } => TaskKind::SantaFe,
            TaskSource::Sine { .. } => TaskKind::SineWave,
            TaskSource::SpokenDigit { .. } => TaskKind::SpokenDigit,
            TaskSource::SyntheticDigit { .. } => TaskKind::SyntheticDigit,
        }
    }

    pub fn channel_model(&self) -> Option<ChannelModel> {
        match self {
            TaskSource::Channel {
                alphabet,
                quadratic,
                cubic,
                boundary,
                ..
            } => {
                let d = ChannelModel::default();
                let mut alphabet = alphabet.clone().unwrap_or(d.alphabet);
                alphabet.sort_by(f64::total_cmp);
                Some(ChannelModel {
                    alphabet,
                    quadratic: quadratic.unwrap_or(d.quadratic),
                    cubic: cubic.unwrap_or(d.cubic),
                    boundary: boundary.unwrap_or(d.boundary),
                })
            }
            _ => None,
        }
    }

    pub fn synthetic_digits(&self) -> Option<SyntheticDigits> {
        match self {
            TaskSource::SyntheticDigit {
                classes,
                utterances_per_class,
                frames_per_utterance,
                sigma,
            } => {
                let d = SyntheticDigits::default();
                Some(SyntheticDigits {
                    classes: classes.unwrap_or(d.classes),
                    utterances_per_class: utterances_per_class.unwrap_or(d.utterances_per_class),
                    frames_per_utterance: frames_per_utterance.unwrap_or(d.frames_per_utterance),
                    sigma: sigma.unwrap_or(d.sigma),
                })
            }
            _ => None,
        }
    }

    /// Output channels of the readout (one-hot classes for digits).
    pub fn classes(&self) -> usize {
        match self {
            TaskSource::SyntheticDigit { classes, .. } => classes.unwrap_or(DIGIT_CLASSES),
            _ => DIGIT_CLASSES,
        }
    }
}

/// One task of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub id: TaskId,
    pub source: TaskSource,
    /// Fraction of `T_sample` during training; fixes the node count.
    pub share_train: Share,
    /// Fraction of `T_sample` during testing; defaults to `share_train`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share_test: Option<Share>,
    /// Leading steps (utterances for digit tasks) used for training.
    pub train: usize,
    /// Trailing steps (utterances) used for testing; defaults to all
    /// remaining ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<usize>,
    #[serde(default)]
    pub mask: MaskMode,
    /// Gain applied to the raw input before masking.
    #[serde(default = "default_scale")]
    pub input_scale: f64,
}

impl TaskConfig {
    pub fn new(id: &str, source: TaskSource, share_train: Share, train: usize, test: usize) -> Self {
        Self {
            id: TaskId::new(id),
            source,
            share_train,
            share_test: None,
            train,
            test: Some(test),
            mask: MaskMode::default(),
            input_scale: 1.0,
        }
    }

    pub fn share_test(&self) -> Share {
        self.share_test.unwrap_or(self.share_train)
    }
}

/// Complete description of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub reservoir: ReservoirParams,
    pub timing: TimingConfig,
    #[serde(default)]
    pub readout: ReadoutConfig,
    /// Initial macro steps of each phase excluded from training and scoring.
    #[serde(default = "default_washout")]
    pub washout: usize,
    #[serde(default)]
    pub pad: PadPolicy,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Results directory; not part of the digest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub tasks: Vec<TaskConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Parses and validates a config file. Relative data paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg =
            Self::from_toml_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            for t in &mut cfg.tasks {
                match &mut t.source {
                    TaskSource::SantaFe { path, .. } | TaskSource::SpokenDigit { path } if path.is_relative() => {
                        *path = base.join(&*path);
                    }
                    _ => {}
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn k(&self) -> usize {
        self.tasks.len()
    }

    pub fn tau_slots(&self) -> usize {
        self.timing
            .tau_slots
            .unwrap_or(self.timing.sample_slots + GAP_SLOTS * self.k().saturating_sub(1))
    }

    /// Train-phase node count of each task.
    pub fn node_count(&self, task: &TaskConfig) -> Result<usize, HarnessError> {
        task.share_train
            .whole_part_of(self.timing.sample_slots as u64)
            .filter(|&n| n > 0)
            .map(|n| n as usize)
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "task `{}`: share {} of {} sample slots is not a whole node count",
                    task.id, task.share_train, self.timing.sample_slots
                ))
            })
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        self.reservoir
            .validate()
            .map_err(|e| HarnessError::Config(format!("reservoir: {e}")))?;
        if self.tasks.is_empty() {
            return err("at least one task is required".into());
        }
        if self.seeds.is_empty() {
            return err("seed list is empty".into());
        }
        if self.timing.sample_slots == 0 {
            return err("timing.sample_slots must be positive".into());
        }
        let mut ids = HashSet::new();
        for t in &self.tasks {
            if !ids.insert(&t.id) {
                return err(format!("duplicate task id `{}`", t.id));
            }
            if t.train == 0 || t.test == Some(0) {
                return err(format!("task `{}`: train and test counts must be positive", t.id));
            }
            if !(t.input_scale.is_finite()) {
                return err(format!("task `{}`: input_scale must be finite", t.id));
            }
            self.node_count(t)?;
            match &t.source {
                TaskSource::SantaFe { path, horizon } => {
                    if !path.is_file() {
                        return err(format!("task `{}`: data file {} not found", t.id, path.display()));
                    }
                    if *horizon == 0 {
                        return err(format!("task `{}`: horizon must be >= 1", t.id));
                    }
                }
                TaskSource::SpokenDigit { path } if !path.is_file() => {
                    return err(format!("task `{}`: data file {} not found", t.id, path.display()));
                }
                TaskSource::Sine { period, horizon } => {
                    if period.is_nan() || *period <= 0.0 || *horizon == 0 {
                        return err(format!("task `{}`: sine period and horizon must be positive", t.id));
                    }
                }
                TaskSource::Channel { snr_db, .. } => {
                    if snr_db.is_some_and(|s| !s.is_finite()) {
                        return err(format!("task `{}`: snr_db must be finite", t.id));
                    }
                    let model = t.source.channel_model().expect("channel source");
                    if model.alphabet.is_empty() {
                        return err(format!("task `{}`: empty alphabet", t.id));
                    }
                }
                _ => {}
            }
        }
        for (phase, total) in [
            (
                "train",
                self.tasks
                    .iter()
                    .map(|t| t.share_train.ratio())
                    .sum::<num_rational::Ratio<u64>>(),
            ),
            ("test", self.tasks.iter().map(|t| t.share_test().ratio()).sum()),
        ] {
            if total > num_rational::Ratio::from_integer(1) {
                return err(format!("{phase} shares sum to {total} > 1"));
            }
        }
        let nodes: usize = self.tasks.iter().map(|t| self.node_count(t)).sum::<Result<_, _>>()?;
        let needed = nodes + GAP_SLOTS * (self.k() - 1);
        if needed > self.tau_slots() {
            return err(format!(
                "layout needs {needed} slots but tau/h = {} (deficit {})",
                self.tau_slots(),
                needed - self.tau_slots()
            ));
        }
        if let Some(grid) = &self.readout.lambda_grid {
            if grid.is_empty() || grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
                return err("readout.lambda_grid must hold finite non-negative values".into());
            }
            let f = self.readout.validation_fraction;
            if !(f > 0.0 && f < 1.0) {
                return err("readout.validation_fraction must be in (0, 1)".into());
            }
        } else if !(self.readout.lambda >= 0.0 && self.readout.lambda.is_finite()) {
            return err("readout.lambda must be finite and >= 0".into());
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form (sorted keys, output path
    /// dropped), hex encoded.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let value = serde_json::to_value(&canonical).expect("config serializes");
        let bytes = serde_json::to_vec(&value).expect("value serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Deterministic per-(seed, purpose, task) stream seed.
pub fn derive_seed(seed: u64, purpose: &str, task: &TaskId) -> u64 {
    let h = Sha256::digest(format!("{seed}:{purpose}:{task}").as_bytes());
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))
}

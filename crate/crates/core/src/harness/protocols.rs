//! Ready-made configurations for the single-task runs and the 2-, 3- and
//! 4-task time-shared protocols.
//!
//! Santa Fe and spoken-digit entries need data files; when none is given the
//! sine surrogate and the synthetic digit generator take their place.

use std::path::PathBuf;

use super::config::{
    ExperimentConfig, ReadoutConfig, TaskConfig, TaskSource, TimingConfig, DEFAULT_VALIDATION_FRACTION, DEFAULT_WASHOUT,
};
use crate::readout::{DEFAULT_LAMBDA, DEFAULT_LAMBDA_GRID};
use crate::reservoir::{Coupling, MaskMode, ReservoirParams};
use crate::tdm::{PadPolicy, Share};

/// Default sample period in slots: 200 nodes for a single task.
pub const SAMPLE_SLOTS: usize = 200;

/// Shared node parameters used by the presets.
pub fn default_reservoir() -> ReservoirParams {
    ReservoirParams::new(0.7, 0.1, 0.1).with_coupling(Coupling::Neighbor)
}

fn share(n: u64, d: u64) -> Share {
    Share::new(n, d).expect("preset shares are valid")
}

fn base(tasks: Vec<TaskConfig>) -> ExperimentConfig {
    ExperimentConfig {
        reservoir: default_reservoir(),
        timing: TimingConfig {
            sample_slots: SAMPLE_SLOTS,
            tau_slots: None,
        },
        readout: ReadoutConfig {
            lambda: DEFAULT_LAMBDA,
            lambda_grid: Some(DEFAULT_LAMBDA_GRID.to_vec()),
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
        },
        washout: DEFAULT_WASHOUT,
        pad: PadPolicy::default(),
        seeds: (0..super::DEFAULT_SEED_COUNT).collect(),
        output: None,
        tasks,
    }
}

fn scalar(mut t: TaskConfig) -> TaskConfig {
    t.mask = MaskMode::Continuous;
    t
}

pub fn narma_task(share_train: Share, train: usize, test: usize) -> TaskConfig {
    scalar(TaskConfig::new("narma", TaskSource::Narma {}, share_train, train, test))
}

pub fn channel_task(snr_db: Option<f64>, share_train: Share, train: usize, test: usize) -> TaskConfig {
    let source = TaskSource::Channel {
        snr_db,
        alphabet: None,
        quadratic: None,
        cubic: None,
        boundary: None,
    };
    scalar(TaskConfig::new("channel", source, share_train, train, test))
}

/// Santa Fe from `path`, or the sine surrogate.
pub fn series_task(path: Option<PathBuf>, share_train: Share, train: usize, test: usize) -> TaskConfig {
    let from_file = path.is_some();
    let source = match path {
        Some(path) => TaskSource::SantaFe { path, horizon: 1 },
        None => TaskSource::Sine {
            period: super::config::DEFAULT_SINE_PERIOD,
            horizon: 1,
        },
    };
    let mut t = scalar(TaskConfig::new("santa-fe", source, share_train, train, test));
    if from_file {
        t.test = None;
    }
    t
}

/// Feature file from `path`, or synthetic digits with enough utterances per
/// class to cover `train + test`.
pub fn digit_task(path: Option<PathBuf>, share_train: Share, train: usize, test: usize) -> TaskConfig {
    let source = match path {
        Some(path) => TaskSource::SpokenDigit { path },
        None => TaskSource::SyntheticDigit {
            classes: None,
            utterances_per_class: Some((train + test).div_ceil(10).max(50)),
            frames_per_utterance: None,
            sigma: None,
        },
    };
    TaskConfig::new("digits", source, share_train, train, test)
}

pub fn narma_single() -> ExperimentConfig {
    base(vec![narma_task(Share::one(), 1600, 1600)])
}

pub fn channel_single(snr_db: f64) -> ExperimentConfig {
    base(vec![channel_task(Some(snr_db), Share::one(), 3000, 10_000)])
}

pub fn series_single(path: Option<PathBuf>) -> ExperimentConfig {
    base(vec![series_task(path, Share::one(), 5000, 5000)])
}

pub fn digit_single(path: Option<PathBuf>) -> ExperimentConfig {
    base(vec![digit_task(path, Share::one(), 400, 100)])
}

/// Two tasks: Santa Fe and channel at 5/8 and 3/8 of the sample period,
/// retimed to 5/6 and 1/6 for testing.
pub fn p2(santa_fe: Option<PathBuf>) -> ExperimentConfig {
    let mut sf = series_task(santa_fe, share(5, 8), 5000, 5000);
    sf.share_test = Some(share(5, 6));
    let mut ch = channel_task(Some(32.0), share(3, 8), 3000, 1000);
    ch.share_test = Some(share(1, 6));
    base(vec![sf, ch])
}

/// Three tasks: Santa Fe, channel and digits at 4/8, 2/8 and 1/8.
pub fn p3(santa_fe: Option<PathBuf>, digits: Option<PathBuf>) -> ExperimentConfig {
    base(vec![
        series_task(santa_fe, share(4, 8), 4000, 4000),
        channel_task(Some(32.0), share(2, 8), 3000, 1000),
        digit_task(digits, share(1, 8), 400, 100),
    ])
}

/// Four tasks: Santa Fe, channel, digits and NARMA at 4/8, 2/8, 1/8, 1/8,
/// retimed to 2/8 each for testing.
pub fn p4(santa_fe: Option<PathBuf>, digits: Option<PathBuf>) -> ExperimentConfig {
    let mut tasks = vec![
        series_task(santa_fe, share(4, 8), 3000, 1000),
        channel_task(Some(32.0), share(2, 8), 3000, 1000),
        digit_task(digits, share(1, 8), 400, 400),
        narma_task(share(1, 8), 1600, 1600),
    ];
    for t in &mut tasks {
        t.share_test = Some(share(2, 8));
    }
    base(tasks)
}

/// The k-task protocol for k in 2..=4.
pub fn multitask(k: usize, santa_fe: Option<PathBuf>, digits: Option<PathBuf>) -> Option<ExperimentConfig> {
    match k {
        2 => Some(p2(santa_fe)),
        3 => Some(p3(santa_fe, digits)),
        4 => Some(p4(santa_fe, digits)),
        _ => None,
    }
}

/// Single-task copy of task `index` of `cfg` with the same node count,
/// parameters and seeds; the run it describes reproduces that task's slice
/// of the time-shared run.
pub fn isolate(cfg: &ExperimentConfig, index: usize) -> ExperimentConfig {
    let mut single = cfg.clone();
    single.tasks = vec![cfg.tasks[index].clone()];
    single.timing.tau_slots = None;
    single
}

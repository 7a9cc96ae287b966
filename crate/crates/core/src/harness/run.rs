use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::config::{derive_seed, ExperimentConfig, TaskConfig, TaskSource};
use super::{HarnessError, Phase};
use crate::exec::{self, Execution};
use crate::metrics::{self, MetricName, MetricReport, TieBreak};
use crate::readout::{self, ReadoutModel};
use crate::reservoir::{self, Mask, StateMatrix};
use crate::tasks::{self, Split, TaskDataset, TaskKind};
use crate::tdm::{self, Share, TaskId, TaskSlotSpec, TdmSchedule};

pub const SCHEMA_VERSION: u32 = 1;

type Result<T> = std::result::Result<T, HarnessError>;

fn split_for(task: &TaskConfig, available: usize) -> Result<Split> {
    let test = match task.test {
        Some(t) => t,
        None => available.checked_sub(task.train).filter(|&t| t > 0).ok_or_else(|| {
            HarnessError::Config(format!(
                "task `{}`: {} training items leave nothing to test out of {available}",
                task.id, task.train
            ))
        })?,
    };
    Ok(Split {
        train: task.train,
        test,
    })
}

fn generated_split(task: &TaskConfig) -> Result<Split> {
    let test = task.test.ok_or_else(|| {
        HarnessError::Config(format!(
            "task `{}`: generated data needs an explicit test count",
            task.id
        ))
    })?;
    Ok(Split {
        train: task.train,
        test,
    })
}

/// Runs the input through the zero-order hold at its native spacing.
fn held(values: &[f64]) -> std::result::Result<Vec<f64>, tdm::TdmError> {
    let stamped: Vec<(f64, f64)> = values.iter().enumerate().map(|(n, &v)| (n as f64, v)).collect();
    tdm::sample_and_hold(&stamped, 1.0)
}

/// Generates or loads one task's dataset for a data seed.
pub fn build_dataset(task: &TaskConfig, data_seed: u64) -> Result<TaskDataset> {
    let data_err = |e: tasks::TaskError| HarnessError::stage(Some(&task.id), Phase::Data, e);
    let kind = task.source.kind();
    let share = task.share_train;
    let mut ds = match &task.source {
        TaskSource::Narma {} => {
            let split = generated_split(task)?;
            let n = tasks::gen_narma10(split.train + split.test + 1, data_seed).map_err(data_err)?;
            let last = n.u.len() - 1;
            TaskDataset::scalar(kind, &n.u[..last], &n.y[1..], split, share)
        }
        TaskSource::Channel { snr_db, .. } => {
            let split = generated_split(task)?;
            let model = task.source.channel_model().expect("channel source");
            let c = tasks::gen_channel(split.train + split.test, data_seed, *snr_db, &model).map_err(data_err)?;
            TaskDataset::scalar(kind, &c.s, &c.g, split, share)
        }
        TaskSource::SantaFe { path, horizon } => {
            let series = tasks::load_santa_fe(path).map_err(data_err)?;
            let (x, y) = tasks::santa_fe_prediction_pairs(&series.values, *horizon).map_err(data_err)?;
            let split = split_for(task, x.len())?;
            TaskDataset::scalar(kind, &x, &y, split, share)
        }
        TaskSource::Sine { period, horizon } => {
            let split = generated_split(task)?;
            let wave = tasks::gen_sine(split.train + split.test + horizon, *period, data_seed).map_err(data_err)?;
            let (x, y) = tasks::santa_fe_prediction_pairs(&wave, *horizon).map_err(data_err)?;
            TaskDataset::scalar(kind, &x, &y, split, share)
        }
        TaskSource::SpokenDigit { path } => {
            let utts = tasks::load_digit_features(path).map_err(data_err)?;
            let split = split_for(task, utts.len())?;
            TaskDataset::digits(kind, &utts, task.source.classes(), split, share)
        }
        TaskSource::SyntheticDigit { .. } => {
            let cfg = task.source.synthetic_digits().expect("synthetic digit source");
            let utts = tasks::gen_synthetic_digits(data_seed, &cfg).map_err(data_err)?;
            let split = split_for(task, utts.len())?;
            TaskDataset::digits(kind, &utts, cfg.classes, split, share)
        }
    }
    .map_err(data_err)?;

    if ds.input_dim() == 1 {
        let col: Vec<f64> = ds.inputs.column(0).to_vec();
        let h = held(&col).map_err(|e| HarnessError::stage(Some(&task.id), Phase::Data, e))?;
        ds.inputs.column_mut(0).assign(&ndarray::Array1::from(h));
    }
    if task.input_scale != 1.0 {
        ds.inputs.mapv_inplace(|v| v * task.input_scale);
    }
    Ok(ds)
}

/// Everything one seed produced for one task.
#[derive(Debug, Clone)]
pub struct TaskOutcome {
    pub id: TaskId,
    pub node_count: usize,
    /// States over the training rows (washout included).
    pub train_states: StateMatrix,
    /// States over the scored test rows.
    pub test_states: StateMatrix,
    /// Readout outputs over the scored test rows.
    pub predictions: Array2<f64>,
    pub readout: ReadoutModel,
    pub report: MetricReport,
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub tasks: Vec<TaskOutcome>,
    pub elapsed_s: f64,
    /// Macro steps simulated across both phases.
    pub macro_steps: usize,
}

struct PhaseRun {
    states: BTreeMap<TaskId, StateMatrix>,
    steps: usize,
}

fn run_phase(
    cfg: &ExperimentConfig,
    schedule: &TdmSchedule,
    segments: &[(&TaskId, Array2<f64>)],
    masks: &[Mask],
    phase: Phase,
) -> Result<PhaseRun> {
    let mut drives = BTreeMap::new();
    for ((id, inputs), mask) in segments.iter().zip(masks) {
        let d = reservoir::apply_mask(inputs.view(), mask).map_err(|e| HarnessError::stage(Some(id), phase, e))?;
        drives.insert((*id).clone(), d);
    }
    let stage = |e: tdm::TdmError| HarnessError::stage(None, phase, e);
    let stream = tdm::interleave(&drives, schedule, cfg.pad).map_err(stage)?;
    let global = tdm::run_scheduled(
        stream.stream.view(),
        schedule,
        &cfg.reservoir,
        None,
        Execution::Sequential,
    )
    .map_err(stage)?;
    Ok(PhaseRun {
        states: tdm::deinterleave(&global, schedule).map_err(stage)?,
        steps: stream.stream.nrows(),
    })
}

fn score(
    task: &TaskConfig,
    ds: &TaskDataset,
    predictions: &Array2<f64>,
    test_targets: ndarray::ArrayView2<'_, f64>,
) -> std::result::Result<MetricReport, super::StageError> {
    let n = predictions.nrows();
    let col = |a: ndarray::ArrayView2<'_, f64>| a.column(0).to_vec();
    Ok(match ds.kind {
        TaskKind::Narma => {
            let (p, t) = (col(predictions.view()), col(test_targets));
            MetricReport::new(MetricName::Nrmse, metrics::nrmse(&p, &t)?, n).with_extra("nmse", metrics::nmse(&p, &t)?)
        }
        TaskKind::SantaFe | TaskKind::SineWave => {
            let (p, t) = (col(predictions.view()), col(test_targets));
            MetricReport::new(MetricName::Nmse, metrics::nmse(&p, &t)?, n)
        }
        TaskKind::Channel => {
            let model = task.source.channel_model().expect("channel source");
            let (p, t) = (col(predictions.view()), col(test_targets));
            let (errors, n) = metrics::symbol_errors(&p, &t, &model.alphabet, TieBreak::Lower)?;
            MetricReport::new(MetricName::Ser, errors as f64 / n as f64, n).with_extra("errors", errors as f64)
        }
        TaskKind::SpokenDigit | TaskKind::SyntheticDigit => {
            let index = ds.utterances.as_ref().expect("digit datasets carry utterances");
            let start = ds.test_start();
            let first = index
                .spans
                .iter()
                .position(|s| s.start >= start)
                .expect("test utterances");
            let spans: Vec<_> = index.spans[first..]
                .iter()
                .map(|s| s.start - start..s.end - start)
                .collect();
            let predicted = readout::classify_winner_take_all(predictions.view(), &spans)?;
            let truth = &index.labels[first..];
            let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
            MetricReport::new(MetricName::Wer, metrics::wer(&predicted, truth)?, truth.len())
                .with_extra("errors", wrong as f64)
        }
    })
}

/// Runs the full train/test pipeline for one seed.
pub fn simulate_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutcome> {
    let started = Instant::now();
    let datasets: Vec<TaskDataset> = cfg
        .tasks
        .iter()
        .map(|t| build_dataset(t, derive_seed(seed, "data", &t.id)))
        .collect::<Result<_>>()?;

    let mut specs = Vec::with_capacity(cfg.k());
    let mut masks = Vec::with_capacity(cfg.k());
    for (t, ds) in cfg.tasks.iter().zip(&datasets) {
        let nodes = cfg.node_count(t)?;
        let spec = TaskSlotSpec::from_share(t.id.clone(), t.share_train, cfg.timing.sample_slots as f64, 1.0)
            .map_err(|e| HarnessError::stage(Some(&t.id), Phase::Train, e))?;
        debug_assert_eq!(spec.node_count, nodes);
        specs.push(spec);
        let mask = reservoir::make_mask(derive_seed(seed, "mask", &t.id), nodes, ds.input_dim(), t.mask)
            .map_err(|e| HarnessError::stage(Some(&t.id), Phase::Train, e))?;
        masks.push(mask);
    }
    let tau = cfg.tau_slots() as f64;
    let train_schedule =
        tdm::build_schedule(&specs, tau, 1.0).map_err(|e| HarnessError::stage(None, Phase::Train, e))?;

    // training phase
    let segments: Vec<_> = cfg
        .tasks
        .iter()
        .zip(&datasets)
        .map(|(t, ds)| (&t.id, ds.inputs.slice(s![..ds.split.train, ..]).to_owned()))
        .collect();
    let train = run_phase(cfg, &train_schedule, &segments, &masks, Phase::Train)?;

    let mut readouts = Vec::with_capacity(cfg.k());
    let mut train_states = Vec::with_capacity(cfg.k());
    for (t, ds) in cfg.tasks.iter().zip(&datasets) {
        let stage = |e: readout::ReadoutError| HarnessError::stage(Some(&t.id), Phase::Train, e);
        let states = train.states[&t.id].slice_rows(0..ds.split.train);
        let targets = ds.targets.slice(s![..ds.split.train, ..]);
        let keep: Vec<bool> = (0..ds.split.train).map(|n| n >= cfg.washout).collect();
        let model = match &cfg.readout.lambda_grid {
            Some(grid) => readout::train_readout_validated(
                states.view(),
                targets,
                grid,
                cfg.readout.validation_fraction,
                Some(&keep),
            ),
            None => readout::train_readout(states.view(), targets, cfg.readout.lambda, Some(&keep)),
        }
        .map_err(stage)?;
        readouts.push(model);
        train_states.push(states);
    }

    // test phase: same layout, test-phase shares; each task is warmed up on
    // the rows just before its test segment
    let test_shares: Vec<Share> = cfg.tasks.iter().map(|t| t.share_test()).collect();
    let test_schedule = train_schedule
        .retimed(&test_shares)
        .map_err(|e| HarnessError::stage(None, Phase::Test, e))?;
    let warmups: Vec<usize> = datasets.iter().map(|ds| cfg.washout.min(ds.test_start())).collect();
    let segments: Vec<_> = cfg
        .tasks
        .iter()
        .zip(&datasets)
        .zip(&warmups)
        .map(|((t, ds), &w)| (&t.id, ds.inputs.slice(s![ds.test_start() - w.., ..]).to_owned()))
        .collect();
    let test = run_phase(cfg, &test_schedule, &segments, &masks, Phase::Test)?;

    let mut outcomes = Vec::with_capacity(cfg.k());
    for (((t, ds), model), (w, train_states)) in cfg
        .tasks
        .iter()
        .zip(&datasets)
        .zip(readouts)
        .zip(warmups.into_iter().zip(train_states))
    {
        let scored = test.states[&t.id].slice_rows(w..w + ds.split.test);
        let predictions =
            readout::predict(scored.view(), &model).map_err(|e| HarnessError::stage(Some(&t.id), Phase::Test, e))?;
        let targets = ds.targets.slice(s![ds.test_start().., ..]);
        let report = score(t, ds, &predictions, targets)
            .map_err(|source| HarnessError::Stage {
                task: Some(t.id.clone()),
                phase: Phase::Test,
                source,
            })?
            .with_extra("lambda", model.ridge_lambda());
        outcomes.push(TaskOutcome {
            id: t.id.clone(),
            node_count: model.node_count(),
            train_states,
            test_states: scored,
            predictions,
            readout: model,
            report,
        });
    }
    Ok(SeedOutcome {
        seed,
        tasks: outcomes,
        elapsed_s: started.elapsed().as_secs_f64(),
        macro_steps: train.steps + test.steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetric {
    pub seed: u64,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub id: TaskId,
    pub kind: TaskKind,
    pub share_train: Share,
    pub share_test: Share,
    pub node_count: usize,
    pub metric: MetricName,
    pub per_seed: Vec<SeedMetric>,
    pub mean: f64,
    /// Sample standard deviation across seeds.
    pub std: f64,
}

/// Wall-clock fields; the only part of a record that varies between
/// identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_s: f64,
    pub per_seed_s: Vec<f64>,
    /// Simulated macro steps per second, summed over seeds.
    pub macro_steps_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub digest: String,
    pub k: usize,
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskResult>,
    pub timing: Timing,
    pub versions: BTreeMap<String, String>,
}

impl ResultRecord {
    /// JSON form without the timing block.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("record serializes");
        v.as_object_mut().expect("record is an object").remove("timing");
        v
    }
}

/// Validates the config and evaluates its seeds in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    run_experiment_with(cfg, Execution::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ResultRecord> {
    cfg.validate()?;
    let started = Instant::now();
    let outcomes: Vec<SeedOutcome> = exec::map(&cfg.seeds, exec, |&seed| simulate_seed(cfg, seed))
        .into_iter()
        .collect::<Result<_>>()?;
    let wall_clock_s = started.elapsed().as_secs_f64();

    let mut tasks = Vec::with_capacity(cfg.k());
    for (i, t) in cfg.tasks.iter().enumerate() {
        let per_seed: Vec<SeedMetric> = outcomes
            .iter()
            .map(|o| SeedMetric {
                seed: o.seed,
                report: o.tasks[i].report.clone(),
            })
            .collect();
        let values: Vec<f64> = per_seed.iter().map(|m| m.report.value).collect();
        let (mean, std) = metrics::mean_std(&values);
        tasks.push(TaskResult {
            id: t.id.clone(),
            kind: t.source.kind(),
            share_train: t.share_train,
            share_test: t.share_test(),
            node_count: outcomes[0].tasks[i].node_count,
            metric: per_seed[0].report.name,
            per_seed,
            mean,
            std,
        });
    }
    let steps: usize = outcomes.iter().map(|o| o.macro_steps).sum();
    let mut versions = BTreeMap::new();
    versions.insert(env!("CARGO_PKG_NAME").to_owned(), env!("CARGO_PKG_VERSION").to_owned());
    Ok(ResultRecord {
        schema_version: SCHEMA_VERSION,
        digest: cfg.digest(),
        k: cfg.k(),
        config: cfg.clone(),
        tasks,
        timing: Timing {
            wall_clock_s,
            per_seed_s: outcomes.iter().map(|o| o.elapsed_s).collect(),
            macro_steps_per_s: steps as f64 / wall_clock_s.max(f64::MIN_POSITIVE),
        },
        versions,
    })
}

/// Writes `<dir>/<name>` through a temporary file and a rename.
pub(crate) fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(io(&tmp))?;
    fs::rename(&tmp, &target).map_err(io(&target))?;
    Ok(target)
}

/// Stores the record as `<dir>/<digest>.json`.
pub fn write_record(record: &ResultRecord, dir: &Path) -> Result<PathBuf> {
    let bytes = serde_json::to_vec_pretty(record).expect("record serializes");
    write_atomic(dir, &format!("{}.json", record.digest), &bytes)
}

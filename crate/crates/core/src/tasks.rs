//! Benchmark datasets: NARMA-10, nonlinear channel equalization, Santa Fe
//! laser one-step prediction, spoken-digit features and their synthetic
//! surrogate, plus a noiseless sine prediction task.
//!
//! Every generator is a pure function of its seed (ChaCha8 streams).

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tdm::Share;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("{path}: {msg}")]
    Load { path: PathBuf, msg: String },
    #[error("{path}, line {line}: {msg}")]
    LoadLine { path: PathBuf, line: usize, msg: String },
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, TaskError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TaskError + '_ {
    move |source| TaskError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    SantaFe,
    Channel,
    Narma,
    SpokenDigit,
    SyntheticDigit,
    /// Noiseless sine one-step prediction; stands in for Santa Fe when the
    /// laser file is not available.
    SineWave,
}

impl TaskKind {
    pub fn is_digit(self) -> bool {
        matches!(self, TaskKind::SpokenDigit | TaskKind::SyntheticDigit)
    }
}

/// Number of leading and trailing steps used for training and testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: usize,
    pub test: usize,
}

/// Utterance spans over the frame axis, with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceIndex {
    pub spans: Vec<Range<usize>>,
    pub labels: Vec<usize>,
}

/// A task's aligned inputs and targets, one row per macro step.
///
/// Training uses the first `split.train` rows and testing the last
/// `split.test` rows.
#[derive(Debug, Clone)]
pub struct TaskDataset {
    pub kind: TaskKind,
    /// `steps x input_dim`.
    pub inputs: Array2<f64>,
    /// `steps x output_channels`.
    pub targets: Array2<f64>,
    pub split: Split,
    pub share: Share,
    /// Present for digit tasks.
    pub utterances: Option<UtteranceIndex>,
}

impl TaskDataset {
    pub fn new(kind: TaskKind, inputs: Array2<f64>, targets: Array2<f64>, split: Split, share: Share) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(TaskError::Argument(format!(
                "{} input rows but {} target rows",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        if split.train == 0 || split.test == 0 {
            return Err(TaskError::Argument("train and test counts must be positive".into()));
        }
        if split.train + split.test > inputs.nrows() {
            return Err(TaskError::Argument(format!(
                "split {} + {} exceeds {} steps",
                split.train,
                split.test,
                inputs.nrows()
            )));
        }
        Ok(Self {
            kind,
            inputs,
            targets,
            split,
            share,
            utterances: None,
        })
    }

    /// Scalar series task: input `x[t]`, target `y[t]`.
    pub fn scalar(kind: TaskKind, inputs: &[f64], targets: &[f64], split: Split, share: Share) -> Result<Self> {
        Self::new(kind, column(inputs), column(targets), split, share)
    }

    /// Digit task over concatenated utterances; `split` counts utterances.
    /// Targets are one-hot per frame over `classes` channels.
    pub fn digits(
        kind: TaskKind,
        utterances: &[Utterance],
        classes: usize,
        split: Split,
        share: Share,
    ) -> Result<Self> {
        if split.train + split.test > utterances.len() {
            return Err(TaskError::Argument(format!(
                "split {} + {} exceeds {} utterances",
                split.train,
                split.test,
                utterances.len()
            )));
        }
        let dim = utterances.first().map_or(DIGIT_FEATURE_DIM, |u| u.frames.ncols());
        let frames: usize = utterances.iter().map(|u| u.frames.nrows()).sum();
        let mut inputs = Array2::zeros((frames, dim));
        let mut targets = Array2::zeros((frames, classes));
        let mut spans = Vec::with_capacity(utterances.len());
        let mut row = 0;
        for u in utterances {
            if u.frames.ncols() != dim {
                return Err(TaskError::Argument(format!(
                    "utterance `{}` has {} features, expected {dim}",
                    u.id,
                    u.frames.ncols()
                )));
            }
            if u.label >= classes {
                return Err(TaskError::Argument(format!(
                    "utterance `{}` label {} outside {classes} classes",
                    u.id, u.label
                )));
            }
            let n = u.frames.nrows();
            inputs.slice_mut(ndarray::s![row..row + n, ..]).assign(&u.frames);
            targets.slice_mut(ndarray::s![row..row + n, u.label]).fill(1.0);
            spans.push(row..row + n);
            row += n;
        }
        let train_frames = spans[..split.train].iter().map(|s| s.len()).sum();
        let test_frames = spans[utterances.len() - split.test..].iter().map(|s| s.len()).sum();
        let mut ds = Self::new(
            kind,
            inputs,
            targets,
            Split {
                train: train_frames,
                test: test_frames,
            },
            share,
        )?;
        ds.utterances = Some(UtteranceIndex {
            spans,
            labels: utterances.iter().map(|u| u.label).collect(),
        });
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// Row index where the test segment starts.
    pub fn test_start(&self) -> usize {
        self.len() - self.split.test
    }
}

fn column(values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("n x 1 shape")
}

// ---------------------------------------------------------------- NARMA-10

/// NARMA-10 input `u` and output `y`, both of the same length; `y[k + 1]`
/// is driven by `u[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NarmaSeries {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

/// Divergence bound for generated NARMA outputs.
pub const NARMA_DIVERGENCE_BOUND: f64 = 10.0;
const NARMA_ATTEMPTS: u64 = 10;

/// Applies the tenth-order NARMA recursion to `u`, with zero history:
/// `y[k+1] = 0.3 y[k] + 0.05 y[k] sum_{i=0..9} y[k-i] + 1.5 u[k] u[k-9] + 0.1`.
pub fn narma10_response(u: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; u.len()];
    for k in 0..u.len().saturating_sub(1) {
        let window: f64 = y[k.saturating_sub(9)..=k].iter().sum();
        let u_lag = if k >= 9 { u[k - 9] } else { 0.0 };
        y[k + 1] = 0.3 * y[k] + 0.05 * y[k] * window + 1.5 * u[k] * u_lag + 0.1;
    }
    y
}

/// Draws `u ~ U[0, 0.5]` and runs the recursion. If any `|y|` exceeds the
/// divergence bound, the input is redrawn from `seed + 1`, up to ten
/// attempts in total.
pub fn gen_narma10(length: usize, seed: u64) -> Result<NarmaSeries> {
    if length < 10 {
        return Err(TaskError::Argument(format!(
            "NARMA-10 needs length >= 10, got {length}"
        )));
    }
    for attempt in 0..NARMA_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let u: Vec<f64> = (0..length).map(|_| rng.random_range(0.0..=0.5)).collect();
        let y = narma10_response(&u);
        if y.iter().all(|v| v.abs() <= NARMA_DIVERGENCE_BOUND) {
            return Ok(NarmaSeries { u, y });
        }
    }
    Err(TaskError::Generation(format!(
        "NARMA-10 diverged for seeds {seed}..{}",
        seed.wrapping_add(NARMA_ATTEMPTS - 1)
    )))
}

// ------------------------------------------------------ channel equalization

/// Intersymbol-interference taps as `(offset, coefficient)` where
/// `z(n) = sum c * g(n - offset)`.
pub const CHANNEL_TAPS: [(isize, f64); 10] = [
    (-2, 0.08),
    (-1, -0.12),
    (0, 1.0),
    (1, 0.18),
    (2, -0.1),
    (3, 0.091),
    (4, -0.05),
    (5, 0.04),
    (6, 0.03),
    (7, 0.01),
];

/// How the first and last samples, whose taps reach outside the symbol
/// sequence, are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelBoundary {
    /// Missing symbols count as 0.
    #[default]
    ZeroPad,
    /// Extra symbols are drawn and edge samples without full tap support
    /// are discarded.
    Discard,
}

/// Symbol alphabet and memoryless distortion `s = z + a2 z^2 + a3 z^3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModel {
    pub alphabet: Vec<f64>,
    pub quadratic: f64,
    pub cubic: f64,
    pub boundary: ChannelBoundary,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            alphabet: vec![-3.0, -1.0, 1.0, 3.0],
            quadratic: 0.036,
            cubic: -0.011,
            boundary: ChannelBoundary::ZeroPad,
        }
    }
}

impl ChannelModel {
    /// Distortion with a quadratic coefficient of 0.36 instead of 0.036.
    /// This folds the z -> s map over the symbol range, so symbols can no
    /// longer be recovered reliably.
    pub fn strong_quadratic() -> Self {
        Self {
            quadratic: 0.36,
            ..Self::default()
        }
    }

    pub fn distort(&self, z: f64) -> f64 {
        z + self.quadratic * z * z + self.cubic * z * z * z
    }
}

/// Zero-padded intersymbol interference.
pub fn channel_isi(g: &[f64]) -> Vec<f64> {
    let len = g.len() as isize;
    (0..len)
        .map(|n| {
            CHANNEL_TAPS
                .iter()
                .filter_map(|&(off, c)| {
                    let idx = n - off;
                    (0..len).contains(&idx).then(|| c * g[idx as usize])
                })
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSeries {
    /// Received signal, the reservoir input.
    pub s: Vec<f64>,
    /// Transmitted symbols, the equalization target, aligned with `s`.
    pub g: Vec<f64>,
    /// `s` before additive noise.
    pub noiseless: Vec<f64>,
}

/// Runs symbols through the channel and adds white Gaussian noise whose
/// variance is `mean(noiseless s^2) / 10^(snr_db / 10)`. `None` disables
/// noise.
pub fn channel_from_symbols(
    g: &[f64],
    model: &ChannelModel,
    snr_db: Option<f64>,
    noise_seed: u64,
) -> Result<ChannelSeries> {
    let z = channel_isi(g);
    let noiseless: Vec<f64> = z.iter().map(|&v| model.distort(v)).collect();
    let s = match snr_db {
        None => noiseless.clone(),
        Some(db) => {
            if !db.is_finite() {
                return Err(TaskError::Argument(format!("SNR must be finite, got {db}")));
            }
            let power = noiseless.iter().map(|v| v * v).sum::<f64>() / noiseless.len().max(1) as f64;
            let sigma = (power / 10f64.powf(db / 10.0)).sqrt();
            let normal = Normal::new(0.0, sigma).map_err(|e| TaskError::Generation(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            noiseless.iter().map(|v| v + normal.sample(&mut rng)).collect()
        }
    };
    Ok(ChannelSeries {
        s,
        g: g.to_vec(),
        noiseless,
    })
}

/// Draws `length` i.i.d. symbols uniformly from the model's alphabet and
/// passes them through the channel.
pub fn gen_channel(length: usize, seed: u64, snr_db: Option<f64>, model: &ChannelModel) -> Result<ChannelSeries> {
    if length < 10 {
        return Err(TaskError::Argument(format!("channel needs length >= 10, got {length}")));
    }
    if model.alphabet.is_empty() {
        return Err(TaskError::Argument("empty symbol alphabet".into()));
    }
    let (lead, tail) = match model.boundary {
        ChannelBoundary::ZeroPad => (0, 0),
        ChannelBoundary::Discard => (7, 2),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..length + lead + tail)
        .map(|_| model.alphabet[rng.random_range(0..model.alphabet.len())])
        .collect();
    // noise uses its own stream so symbols do not depend on the SNR
    let full = channel_from_symbols(&g, model, snr_db, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let keep = lead..lead + length;
    Ok(ChannelSeries {
        s: full.s[keep.clone()].to_vec(),
        g: full.g[keep.clone()].to_vec(),
        noiseless: full.noiseless[keep].to_vec(),
    })
}

// ------------------------------------------------------- Santa Fe & series

/// Affine map applied by normalization; `raw = value * std + mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: f64,
    pub std: f64,
}

impl Normalization {
    /// Population mean and standard deviation of `values`.
    pub fn fit(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (var > 0.0).then(|| Self { mean, std: var.sqrt() })
    }

    pub fn normalize(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn denormalize(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v * self.std + self.mean).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub values: Vec<f64>,
    pub normalization: Normalization,
}

/// Reads a one-value-per-line file (blank lines ignored) and normalizes it
/// to zero mean and unit variance.
pub fn load_santa_fe(path: &Path) -> Result<NormalizedSeries> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| TaskError::LoadLine {
            path: path.to_owned(),
            line: i + 1,
            msg: format!("cannot parse `{line}` as a number"),
        })?;
        if !v.is_finite() {
            return Err(TaskError::LoadLine {
                path: path.to_owned(),
                line: i + 1,
                msg: "non-finite value".into(),
            });
        }
        raw.push(v);
    }
    if raw.is_empty() {
        return Err(TaskError::Load {
            path: path.to_owned(),
            msg: "no values".into(),
        });
    }
    let normalization = Normalization::fit(&raw).ok_or_else(|| TaskError::Load {
        path: path.to_owned(),
        msg: "zero variance; cannot normalize".into(),
    })?;
    Ok(NormalizedSeries {
        values: normalization.normalize(&raw),
        normalization,
    })
}

/// Inputs `series[..L - horizon]` and targets `series[horizon..]`.
pub fn santa_fe_prediction_pairs(series: &[f64], horizon: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if horizon == 0 {
        return Err(TaskError::Argument("horizon must be >= 1".into()));
    }
    if series.len() <= horizon {
        return Err(TaskError::Argument(format!(
            "series of length {} is too short for horizon {horizon}",
            series.len()
        )));
    }
    Ok((series[..series.len() - horizon].to_vec(), series[horizon..].to_vec()))
}

/// `sin(2 pi t / period + phase)` with the phase drawn from `seed`.
pub fn gen_sine(length: usize, period: f64, seed: u64) -> Result<Vec<f64>> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(TaskError::Argument(format!(
            "sine period must be positive, got {period}"
        )));
    }
    let phase = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..TAU);
    Ok((0..length).map(|t| (TAU * t as f64 / period + phase).sin()).collect())
}

// ------------------------------------------------------------------ digits

pub const DIGIT_FEATURE_DIM: usize = 86;
pub const DIGIT_CLASSES: usize = 10;

/// One isolated word: `frames x features` with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub label: usize,
    pub frames: Array2<f64>,
}

/// Reads `utterance_id,label,f1..f86` rows. A non-numeric first row is
/// taken as a header. Rows are grouped by utterance id in order of first
/// appearance.
pub fn load_digit_features(path: &Path) -> Result<Vec<Utterance>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| TaskError::Load {
            path: path.to_owned(),
            msg: e.to_string(),
        })?;
    let line_err = |line: usize, msg: String| TaskError::LoadLine {
        path: path.to_owned(),
        line,
        msg,
    };

    let mut order: Vec<(String, usize, Vec<f64>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| line_err(line, e.to_string()))?;
        let is_header = i == 0 && record.iter().skip(1).any(|f| f.parse::<f64>().is_err());
        if is_header {
            continue;
        }
        if record.len() != DIGIT_FEATURE_DIM + 2 {
            return Err(line_err(
                line,
                format!("expected {} columns, found {}", DIGIT_FEATURE_DIM + 2, record.len()),
            ));
        }
        let id = record[0].to_owned();
        let label: usize = record[1]
            .parse()
            .ok()
            .filter(|&l| l < DIGIT_CLASSES)
            .ok_or_else(|| line_err(line, format!("label `{}` outside 0-9", &record[1])))?;
        let mut features = Vec::with_capacity(DIGIT_FEATURE_DIM);
        for f in record.iter().skip(2) {
            features.push(
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| line_err(line, format!("bad feature value `{f}`")))?,
            );
        }
        match index.get(&id) {
            Some(&k) => {
                if order[k].1 != label {
                    return Err(line_err(line, format!("utterance `{id}` changes label")));
                }
                order[k].2.extend(features);
            }
            None => {
                index.insert(id.clone(), order.len());
                order.push((id, label, features));
            }
        }
    }
    Ok(order
        .into_iter()
        .map(|(id, label, flat)| {
            let rows = flat.len() / DIGIT_FEATURE_DIM;
            Utterance {
                id,
                label,
                frames: Array2::from_shape_vec((rows, DIGIT_FEATURE_DIM), flat).expect("whole rows"),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticDigits {
    pub classes: usize,
    pub utterances_per_class: usize,
    pub frames_per_utterance: usize,
    /// Standard deviation of per-frame Gaussian jitter.
    pub sigma: f64,
}

impl Default for SyntheticDigits {
    fn default() -> Self {
        Self {
            classes: DIGIT_CLASSES,
            utterances_per_class: 50,
            frames_per_utterance: 20,
            sigma: 0.3,
        }
    }
}

/// Class prototypes drawn uniformly from `[-1, 1]^86`; each frame is its
/// class prototype plus `N(0, sigma^2)` jitter per feature. Utterances cycle
/// through the classes so any prefix is class-balanced.
pub fn gen_synthetic_digits(seed: u64, cfg: &SyntheticDigits) -> Result<Vec<Utterance>> {
    if cfg.classes == 0 || cfg.utterances_per_class == 0 || cfg.frames_per_utterance == 0 {
        return Err(TaskError::Argument("synthetic digit counts must be >= 1".into()));
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(TaskError::Argument(format!("sigma must be >= 0, got {}", cfg.sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prototypes: Vec<Vec<f64>> = (0..cfg.classes)
        .map(|_| (0..DIGIT_FEATURE_DIM).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let jitter = Normal::new(0.0, cfg.sigma).map_err(|e| TaskError::Generation(e.to_string()))?;
    let mut out = Vec::with_capacity(cfg.classes * cfg.utterances_per_class);
    for u in 0..cfg.utterances_per_class {
        for (label, proto) in prototypes.iter().enumerate() {
            let frames = Array2::from_shape_fn((cfg.frames_per_utterance, DIGIT_FEATURE_DIM), |(_, j)| {
                proto[j] + jitter.sample(&mut rng)
            });
            out.push(Utterance {
                id: format!("c{label}_u{u}"),
                label,
                frames,
            });
        }
    }
    Ok(out)
}

// ------------------------------------------------------------------ export

/// One value per line, in the Santa Fe file format.
pub fn write_series(path: &Path, values: &[f64]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    for v in values {
        writeln!(f, "{v}").map_err(io_err(path))?;
    }
    Ok(())
}

/// CSV with a header row and one column per named series.
pub fn write_columns(path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
    let rows = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != rows) {
        return Err(TaskError::Argument("columns differ in length".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| TaskError::Load {
        path: path.to_owned(),
        msg: e.to_string(),
    })?;
    let wrap = |e: csv::Error| TaskError::Load {
        path: path.to_owned(),
        msg: e.to_string(),
    };
    w.write_record(columns.iter().map(|c| c.0)).map_err(wrap)?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c.1[i].to_string()))
            .map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

/// Digit features in the loader's CSV format, with a header row.
pub fn write_digit_features(path: &Path, utterances: &[Utterance]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| TaskError::Load {
        path: path.to_owned(),
        msg: e.to_string(),
    })?;
    let wrap = |e: csv::Error| TaskError::Load {
        path: path.to_owned(),
        msg: e.to_string(),
    };
    let mut header = vec!["utterance_id".to_owned(), "label".to_owned()];
    header.extend((1..=DIGIT_FEATURE_DIM).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(wrap)?;
    for u in utterances {
        write_frames(&mut w, u, u.frames.view()).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

fn write_frames<W: Write>(w: &mut csv::Writer<W>, u: &Utterance, frames: ArrayView2<'_, f64>) -> csv::Result<()> {
    for frame in frames.rows() {
        let mut rec = vec![u.id.clone(), u.label.to_string()];
        rec.extend(frame.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use tempfile::tempdir;

    #[test]
    fn narma_zero_input_examples() {
        let y = narma10_response(&[0.0; 12]);
        assert_eq!(y[0], 0.0);
        assert_abs_diff_eq!(y[1], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(y[2], 0.1305, epsilon = 1e-15);
    }

    #[test]
    fn narma_is_deterministic_and_bounded() {
        let a = gen_narma10(500, 4).unwrap();
        let b = gen_narma10(500, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.u.iter().all(|u| (0.0..=0.5).contains(u)));
        assert_ne!(a, gen_narma10(500, 5).unwrap());
        assert!(gen_narma10(9, 0).is_err());
    }

    #[test]
    fn channel_without_symbols_is_silent() {
        let c = channel_from_symbols(&[0.0; 20], &ChannelModel::default(), None, 0).unwrap();
        assert!(c.s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn channel_impulse_response() {
        let mut g = vec![0.0; 12];
        g[2] = 1.0;
        let z = channel_isi(&g);
        // z(n) is the tap at offset n - 2
        assert_abs_diff_eq!(z[0], 0.08);
        assert_abs_diff_eq!(z[1], -0.12);
        assert_abs_diff_eq!(z[2], 1.0);
        assert_abs_diff_eq!(z[9], 0.01);
        assert_eq!(z[10], 0.0);
    }

    #[test]
    fn channel_boundaries() {
        let pad = gen_channel(50, 3, None, &ChannelModel::default()).unwrap();
        assert_eq!(pad.s.len(), 50);
        assert!(pad.g.iter().all(|g| [-3.0, -1.0, 1.0, 3.0].contains(g)));
        let model = ChannelModel {
            boundary: ChannelBoundary::Discard,
            ..ChannelModel::default()
        };
        let cut = gen_channel(50, 3, None, &model).unwrap();
        assert_eq!(cut.s.len(), 50);
        assert_eq!(cut.g.len(), 50);
        assert!(gen_channel(5, 0, None, &model).is_err());
    }

    #[test]
    fn channel_symbols_do_not_depend_on_snr() {
        let m = ChannelModel::default();
        let a = gen_channel(100, 9, Some(20.0), &m).unwrap();
        let b = gen_channel(100, 9, Some(32.0), &m).unwrap();
        assert_eq!(a.g, b.g);
        assert_eq!(a.noiseless, b.noiseless);
        assert_ne!(a.s, b.s);
    }

    #[test]
    fn santa_fe_loading() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("sf.txt");
        fs::write(&p, "1\n\n2\n3\n").unwrap();
        let s = load_santa_fe(&p).unwrap();
        assert_abs_diff_eq!(s.values[0], -1.224744871391589, epsilon = 1e-12);
        assert_abs_diff_eq!(s.values[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.values[2], 1.224744871391589, epsilon = 1e-12);
        let back = s.normalization.denormalize(&s.values);
        for (a, b) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }

        fs::write(&p, "5\n").unwrap();
        assert!(matches!(load_santa_fe(&p), Err(TaskError::Load { .. })));
        fs::write(&p, "").unwrap();
        assert!(matches!(load_santa_fe(&p), Err(TaskError::Load { .. })));
        fs::write(&p, "1\n2\nx7\n").unwrap();
        assert!(matches!(load_santa_fe(&p), Err(TaskError::LoadLine { line: 3, .. })));
    }

    #[test]
    fn prediction_pairs() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            santa_fe_prediction_pairs(&s, 1).unwrap(),
            (vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0])
        );
        assert_eq!(
            santa_fe_prediction_pairs(&s, 2).unwrap(),
            (vec![1.0, 2.0], vec![3.0, 4.0])
        );
        let (i, t) = santa_fe_prediction_pairs(&[5.0; 6], 1).unwrap();
        assert_eq!(i, t);
        assert!(santa_fe_prediction_pairs(&s, 4).is_err());
    }

    fn digit_row(id: &str, label: &str, v: f64) -> String {
        let mut r = format!("{id},{label}");
        for _ in 0..DIGIT_FEATURE_DIM {
            r.push_str(&format!(",{v}"));
        }
        r.push('\n');
        r
    }

    #[test]
    fn digit_feature_loading() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "").unwrap();
        assert!(load_digit_features(&p).unwrap().is_empty());

        let mut text = String::from("utterance_id,label");
        for i in 1..=DIGIT_FEATURE_DIM {
            text.push_str(&format!(",f{i}"));
        }
        text.push('\n');
        text += &digit_row("a", "3", 0.5);
        text += &digit_row("b", "4", 0.1);
        text += &digit_row("a", "3", -0.5);
        fs::write(&p, &text).unwrap();
        let u = load_digit_features(&p).unwrap();
        assert_eq!(u.len(), 2);
        assert_eq!(u[0].frames.nrows(), 2);
        assert_eq!(u[0].frames[[1, 0]], -0.5);
        assert_eq!(u[1].label, 4);

        fs::write(&p, digit_row("a", "10", 0.0)).unwrap();
        assert!(matches!(
            load_digit_features(&p),
            Err(TaskError::LoadLine { line: 1, .. })
        ));
        fs::write(&p, digit_row("a", "1", 0.0) + "a,1,0.5\n").unwrap();
        assert!(matches!(
            load_digit_features(&p),
            Err(TaskError::LoadLine { line: 2, .. })
        ));
    }

    #[test]
    fn synthetic_digits_contract() {
        let cfg = SyntheticDigits {
            utterances_per_class: 2,
            frames_per_utterance: 3,
            ..SyntheticDigits::default()
        };
        let a = gen_synthetic_digits(1, &cfg).unwrap();
        assert_eq!(a, gen_synthetic_digits(1, &cfg).unwrap());
        assert_eq!(a.len(), 20);
        assert_eq!(a[3].label, 3);
        let b = gen_synthetic_digits(2, &cfg).unwrap();
        assert_ne!(a[0].frames.row(0), b[0].frames.row(0));

        let exact = SyntheticDigits {
            sigma: 0.0,
            ..cfg.clone()
        };
        let d = gen_synthetic_digits(1, &exact).unwrap();
        for u in &d {
            assert_eq!(u.frames.row(0), u.frames.row(2));
        }
        assert_eq!(d[0].frames.row(0), d[10].frames.row(1));
        assert!(gen_synthetic_digits(1, &SyntheticDigits { classes: 0, ..cfg }).is_err());
    }

    #[test]
    fn digit_export_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let cfg = SyntheticDigits {
            utterances_per_class: 1,
            frames_per_utterance: 2,
            ..SyntheticDigits::default()
        };
        let u = gen_synthetic_digits(7, &cfg).unwrap();
        write_digit_features(&p, &u).unwrap();
        assert_eq!(load_digit_features(&p).unwrap(), u);
    }

    #[test]
    fn digit_dataset_layout() {
        let cfg = SyntheticDigits {
            utterances_per_class: 2,
            frames_per_utterance: 3,
            ..SyntheticDigits::default()
        };
        let u = gen_synthetic_digits(1, &cfg).unwrap();
        let ds = TaskDataset::digits(
            TaskKind::SyntheticDigit,
            &u,
            10,
            Split { train: 15, test: 5 },
            Share::one(),
        )
        .unwrap();
        assert_eq!(ds.len(), 60);
        assert_eq!(ds.split, Split { train: 45, test: 15 });
        assert_eq!(ds.test_start(), 45);
        let idx = ds.utterances.as_ref().unwrap();
        assert_eq!(idx.spans[4], 12..15);
        assert_eq!(ds.targets.row(13).sum(), 1.0);
        assert_eq!(ds.targets[[13, 4]], 1.0);
        assert!(TaskDataset::digits(
            TaskKind::SyntheticDigit,
            &u,
            10,
            Split { train: 15, test: 6 },
            Share::one()
        )
        .is_err());
    }
}

//! Evaluation metrics.
//!
//! NMSE divides the mean squared error by the population variance of the
//! whole expected series (one variance per series, not per sample). NRMSE is
//! its square root.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("expected series has zero variance")]
    ZeroVariance,
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MetricName {
    Nmse,
    Nrmse,
    Ser,
    Wer,
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::Nmse => "NMSE",
            MetricName::Nrmse => "NRMSE",
            MetricName::Ser => "SER",
            MetricName::Wer => "WER",
        })
    }
}

/// One metric evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: MetricName,
    pub value: f64,
    /// Samples (or utterances) scored.
    pub n: usize,
    /// Auxiliary values such as raw error counts.
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn new(name: MetricName, value: f64, n: usize) -> Self {
        Self {
            name,
            value,
            n,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_owned(), value);
        self
    }
}

fn check_pair(predicted: &[f64], expected: &[f64], min: usize) -> Result<()> {
    if predicted.len() != expected.len() {
        return Err(MetricError::Argument(format!(
            "length mismatch: {} predicted vs {} expected",
            predicted.len(),
            expected.len()
        )));
    }
    if expected.len() < min {
        return Err(MetricError::Argument(format!("need at least {min} samples")));
    }
    Ok(())
}

/// Mean squared error over the population variance of `expected`.
pub fn nmse(predicted: &[f64], expected: &[f64]) -> Result<f64> {
    check_pair(predicted, expected, 2)?;
    let n = expected.len() as f64;
    let mean = expected.iter().sum::<f64>() / n;
    let var = expected.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    let mse = predicted
        .iter()
        .zip(expected)
        .map(|(p, e)| (p - e).powi(2))
        .sum::<f64>()
        / n;
    Ok(mse / var)
}

pub fn nrmse(predicted: &[f64], expected: &[f64]) -> Result<f64> {
    nmse(predicted, expected).map(f64::sqrt)
}

/// Which symbol wins when a value is exactly halfway between two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    #[default]
    Lower,
    Upper,
}

/// Nearest symbol of a sorted alphabet.
pub fn quantize(value: f64, alphabet: &[f64], tie: TieBreak) -> f64 {
    let mut best = alphabet[0];
    let mut best_dist = (value - best).abs();
    for &sym in &alphabet[1..] {
        let d = (value - sym).abs();
        if d < best_dist || (d == best_dist && tie == TieBreak::Upper) {
            best = sym;
            best_dist = d;
        }
    }
    best
}

/// Misclassified symbols and total count after nearest-symbol quantization.
pub fn symbol_errors(
    predicted: &[f64],
    true_symbols: &[f64],
    alphabet: &[f64],
    tie: TieBreak,
) -> Result<(usize, usize)> {
    check_pair(predicted, true_symbols, 1)?;
    if alphabet.is_empty() {
        return Err(MetricError::Argument("empty alphabet".into()));
    }
    if alphabet.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MetricError::Argument("alphabet must be strictly increasing".into()));
    }
    let errors = predicted
        .iter()
        .zip(true_symbols)
        .filter(|(p, t)| quantize(**p, alphabet, tie) != **t)
        .count();
    Ok((errors, predicted.len()))
}

/// Symbol error rate with ties resolved toward the smaller symbol.
pub fn ser(predicted: &[f64], true_symbols: &[f64], alphabet: &[f64]) -> Result<f64> {
    let (errors, n) = symbol_errors(predicted, true_symbols, alphabet, TieBreak::Lower)?;
    Ok(errors as f64 / n as f64)
}

/// Fraction of mismatched labels.
pub fn wer(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(MetricError::Argument(format!(
            "length mismatch: {} predicted vs {} true labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(MetricError::Argument("no labels".into()));
    }
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

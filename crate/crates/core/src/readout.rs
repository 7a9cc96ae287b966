//! Linear readout `O(n) = W s(n) + b` trained by ridge regression.
//!
//! The bias is not penalized. Training centers states and targets over the
//! included rows, solves `(Sc' Sc + lambda I) W = Sc' Tc` with a Cholesky
//! factorization, and recovers `b = mean(T) - W mean(S)`. This is the same
//! minimizer as appending a constant-1 column whose weight escapes the
//! penalty.

use std::ops::Range;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReadoutError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, ReadoutError>;

/// Default ridge penalty.
pub const DEFAULT_LAMBDA: f64 = 1e-6;

/// Penalties tried when the penalty is selected on a validation split.
pub const DEFAULT_LAMBDA_GRID: [f64; 12] = [
    1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1,
];

// Cholesky pivots below this fraction of the largest Gram diagonal are
// treated as singular when lambda = 0.
const SINGULAR_PIVOT: f64 = 1e-13;

/// Trained output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ReadoutDocument", try_from = "ReadoutDocument")]
pub struct ReadoutModel {
    /// `channels x nodes`.
    weights: Array2<f64>,
    bias: Array1<f64>,
    ridge_lambda: f64,
}

/// On-disk form: `{channels, nodes, lambda, weights[][], bias[]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReadoutDocument {
    channels: usize,
    nodes: usize,
    lambda: f64,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl From<ReadoutModel> for ReadoutDocument {
    fn from(m: ReadoutModel) -> Self {
        Self {
            channels: m.channels(),
            nodes: m.node_count(),
            lambda: m.ridge_lambda,
            weights: m.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
            bias: m.bias.to_vec(),
        }
    }
}

impl TryFrom<ReadoutDocument> for ReadoutModel {
    type Error = ReadoutError;

    fn try_from(d: ReadoutDocument) -> Result<Self> {
        if d.weights.len() != d.channels || d.weights.iter().any(|r| r.len() != d.nodes) {
            return Err(ReadoutError::Shape(format!(
                "weights are not {} x {}",
                d.channels, d.nodes
            )));
        }
        let flat: Vec<f64> = d.weights.into_iter().flatten().collect();
        let weights =
            Array2::from_shape_vec((d.channels, d.nodes), flat).map_err(|e| ReadoutError::Shape(e.to_string()))?;
        ReadoutModel::new(weights, Array1::from(d.bias), d.lambda)
    }
}

impl ReadoutModel {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, ridge_lambda: f64) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(ReadoutError::Shape(format!(
                "{} weight rows but {} bias entries",
                weights.nrows(),
                bias.len()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(ReadoutError::Numeric("non-finite readout weights".into()));
        }
        if ridge_lambda.is_nan() || ridge_lambda < 0.0 {
            return Err(ReadoutError::Argument("ridge lambda must be >= 0".into()));
        }
        Ok(Self {
            weights,
            bias,
            ridge_lambda,
        })
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn ridge_lambda(&self) -> f64 {
        self.ridge_lambda
    }

    pub fn channels(&self) -> usize {
        self.weights.nrows()
    }

    pub fn node_count(&self) -> usize {
        self.weights.ncols()
    }

    /// Frobenius norm of the weights (bias excluded).
    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

fn included_rows(n: usize, step_mask: Option<&[bool]>) -> Result<Vec<usize>> {
    match step_mask {
        None => Ok((0..n).collect()),
        Some(m) if m.len() != n => Err(ReadoutError::Shape(format!(
            "step mask has {} entries for {n} rows",
            m.len()
        ))),
        Some(m) => Ok(m
            .iter()
            .enumerate()
            .filter_map(|(i, &keep)| keep.then_some(i))
            .collect()),
    }
}

/// Fits weights and bias on the rows where `step_mask` is true (all rows
/// when `None`).
pub fn train_readout(
    states: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    ridge_lambda: f64,
    step_mask: Option<&[bool]>,
) -> Result<ReadoutModel> {
    if states.nrows() != targets.nrows() {
        return Err(ReadoutError::Shape(format!(
            "{} state rows but {} target rows",
            states.nrows(),
            targets.nrows()
        )));
    }
    if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
        return Err(ReadoutError::Argument(format!(
            "ridge lambda must be finite and >= 0, got {ridge_lambda}"
        )));
    }
    if states.ncols() == 0 || targets.ncols() == 0 {
        return Err(ReadoutError::Argument("need >= 1 node and >= 1 output channel".into()));
    }
    let rows = included_rows(states.nrows(), step_mask)?;
    if rows.is_empty() {
        return Err(ReadoutError::Argument("no training rows included".into()));
    }

    let s = states.select(Axis(0), &rows);
    let t = targets.select(Axis(0), &rows);
    let s_mean = s.mean_axis(Axis(0)).expect("rows is non-empty");
    let t_mean = t.mean_axis(Axis(0)).expect("rows is non-empty");
    let sc = &s - &s_mean;
    let tc = &t - &t_mean;

    let nodes = s.ncols();
    let mut gram = sc.t().dot(&sc);
    gram.diag_mut().mapv_inplace(|v| v + ridge_lambda);
    let rhs = sc.t().dot(&tc);

    let gram_na = DMatrix::from_row_iterator(nodes, nodes, gram.iter().copied());
    let rhs_na = DMatrix::from_row_iterator(nodes, rhs.ncols(), rhs.iter().copied());
    let singular = || {
        ReadoutError::Numeric(format!(
            "normal equations are singular with lambda = {ridge_lambda}; use lambda > 0"
        ))
    };
    let chol = gram_na.clone().cholesky().ok_or_else(singular)?;
    if ridge_lambda == 0.0 {
        let max_diag = gram_na.diagonal().max();
        let min_pivot = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b * b));
        if min_pivot.is_nan() || min_pivot <= SINGULAR_PIVOT * max_diag {
            return Err(singular());
        }
    }
    let w = chol.solve(&rhs_na);

    // nalgebra is column-major; build channels x nodes directly.
    let weights = Array2::from_shape_fn((w.ncols(), nodes), |(c, i)| w[(i, c)]);
    let bias = &t_mean - &weights.dot(&s_mean);
    ReadoutModel::new(weights, bias, ridge_lambda)
}

/// Picks the penalty with the lowest mean squared error on the last
/// `validation_fraction` of the included rows, then refits on all included
/// rows. Penalties whose fit fails numerically are skipped.
pub fn train_readout_validated(
    states: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    grid: &[f64],
    validation_fraction: f64,
    step_mask: Option<&[bool]>,
) -> Result<ReadoutModel> {
    if grid.is_empty() {
        return Err(ReadoutError::Argument("empty lambda grid".into()));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(ReadoutError::Argument("validation fraction must be in (0, 1)".into()));
    }
    let rows = included_rows(states.nrows(), step_mask)?;
    let n_val = ((rows.len() as f64) * validation_fraction).round() as usize;
    if n_val == 0 || n_val >= rows.len() {
        return Err(ReadoutError::Argument(format!(
            "{} included rows are too few for a validation split",
            rows.len()
        )));
    }
    let mut fit_mask = vec![false; states.nrows()];
    for &r in &rows[..rows.len() - n_val] {
        fit_mask[r] = true;
    }
    let val_rows = &rows[rows.len() - n_val..];
    let val_states = states.select(Axis(0), val_rows);
    let val_targets = targets.select(Axis(0), val_rows);

    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for &lambda in grid {
        match train_readout(states, targets, lambda, Some(&fit_mask)) {
            Ok(model) => {
                let pred = predict(val_states.view(), &model)?;
                let mse = (&pred - &val_targets).mapv(|e| e * e).mean().unwrap_or(f64::INFINITY);
                if best.is_none_or(|(_, b)| mse < b) {
                    best = Some((lambda, mse));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((lambda, _)) => {
            let all = included_mask(&rows, states.nrows());
            train_readout(states, targets, lambda, Some(&all))
        }
        None => Err(last_err.expect("grid is non-empty")),
    }
}

fn included_mask(rows: &[usize], n: usize) -> Vec<bool> {
    let mut m = vec![false; n];
    for &r in rows {
        m[r] = true;
    }
    m
}

/// Row-wise `S W' + b`, shape `steps x channels`.
pub fn predict(states: ArrayView2<'_, f64>, model: &ReadoutModel) -> Result<Array2<f64>> {
    if states.ncols() != model.node_count() {
        return Err(ReadoutError::Shape(format!(
            "states have {} nodes, readout expects {}",
            states.ncols(),
            model.node_count()
        )));
    }
    Ok(states.dot(&model.weights.t()) + &model.bias)
}

/// Averages each channel over an utterance's frames and returns the argmax
/// per utterance. Ties go to the lowest channel index.
pub fn classify_winner_take_all(outputs: ArrayView2<'_, f64>, utterances: &[Range<usize>]) -> Result<Vec<usize>> {
    if outputs.ncols() == 0 {
        return Err(ReadoutError::Argument("outputs have no channels".into()));
    }
    utterances
        .iter()
        .map(|r| {
            if r.is_empty() {
                return Err(ReadoutError::Argument(format!("empty utterance range {r:?}")));
            }
            if r.end > outputs.nrows() {
                return Err(ReadoutError::Shape(format!(
                    "utterance {r:?} exceeds {} frames",
                    outputs.nrows()
                )));
            }
            let means = outputs
                .slice(ndarray::s![r.clone(), ..])
                .mean_axis(Axis(0))
                .expect("range is non-empty");
            let mut best = 0;
            for (c, &m) in means.iter().enumerate() {
                if m > means[best] {
                    best = c;
                }
            }
            Ok(best)
        })
        .collect()
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn zero_targets_give_zero_model() {
        let s = array![[0.1, 0.5], [0.3, -0.2], [0.9, 0.4], [-0.5, 0.0]];
        let t = Array2::<f64>::zeros((4, 1));
        let m = train_readout(s.view(), t.view(), 1e-3, None).unwrap();
        assert!(m.weights().iter().all(|w| w.abs() < 1e-12));
        assert!(m.bias()[0].abs() < 1e-12);
    }

    #[test]
    fn constant_targets_go_to_bias() {
        let s = array![[0.1, 0.5], [0.3, -0.2], [0.9, 0.4], [-0.5, 0.0]];
        let t = Array2::from_elem((4, 1), 2.5);
        let m = train_readout(s.view(), t.view(), 0.0, None).unwrap();
        assert_abs_diff_eq!(m.bias()[0], 2.5, epsilon = 1e-12);
        assert!(m.weights().iter().all(|w| w.abs() < 1e-12));
    }

    #[test]
    fn exact_line_fit() {
        let s = array![[1.0], [2.0], [3.0]];
        let t = array![[2.0], [4.0], [6.0]];
        let m = train_readout(s.view(), t.view(), 0.0, None).unwrap();
        assert_abs_diff_eq!(m.weights()[[0, 0]], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.bias()[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn step_mask_excludes_rows() {
        let s = array![[1.0], [2.0], [3.0], [4.0]];
        let t = array![[100.0], [4.0], [6.0], [-7.0]];
        let m = train_readout(s.view(), t.view(), 0.0, Some(&[false, true, true, false])).unwrap();
        assert_abs_diff_eq!(m.weights()[[0, 0]], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn training_errors() {
        let s = array![[1.0], [1.0]];
        let t = array![[1.0], [2.0]];
        assert!(matches!(
            train_readout(s.view(), t.view(), 0.0, None),
            Err(ReadoutError::Numeric(_))
        ));
        assert!(train_readout(s.view(), t.view(), 1e-3, None).is_ok());
        assert!(matches!(
            train_readout(s.view(), t.view(), 1e-3, Some(&[false, false])),
            Err(ReadoutError::Argument(_))
        ));
        assert!(matches!(
            train_readout(s.view(), array![[1.0]].view(), 1e-3, None),
            Err(ReadoutError::Shape(_))
        ));
        assert!(train_readout(s.view(), t.view(), -1.0, None).is_err());
    }

    #[test]
    fn duplicate_columns_are_singular_without_penalty() {
        let s = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [5.0, 5.0]];
        let t = array![[1.0], [2.0], [3.0], [4.0]];
        assert!(matches!(
            train_readout(s.view(), t.view(), 0.0, None),
            Err(ReadoutError::Numeric(_))
        ));
        let m = train_readout(s.view(), t.view(), 1e-6, None).unwrap();
        assert_abs_diff_eq!(m.weights()[[0, 0]], m.weights()[[0, 1]], epsilon = 1e-9);
    }

    #[test]
    fn predict_examples() {
        let m = ReadoutModel::new(Array2::zeros((1, 3)), array![0.7], 0.0).unwrap();
        let out = predict(array![[0.1, 0.2, 0.3], [0.5, 0.5, 0.5]].view(), &m).unwrap();
        assert_eq!(out, array![[0.7], [0.7]]);

        let id = ReadoutModel::new(array![[1.0]], array![0.0], 0.0).unwrap();
        let s = array![[0.3], [-0.8]];
        assert_eq!(predict(s.view(), &id).unwrap(), s);

        let m = ReadoutModel::new(array![[2.0, -1.0]], array![0.5], 0.0).unwrap();
        let out = predict(array![[0.3, 0.4]].view(), &m).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 0.7, epsilon = 1e-15);

        assert!(matches!(predict(array![[0.3]].view(), &m), Err(ReadoutError::Shape(_))));
    }

    #[test]
    fn winner_take_all_examples() {
        let mut one_hot = Array2::<f64>::zeros((4, 10));
        one_hot.column_mut(7).fill(1.0);
        assert_eq!(classify_winner_take_all(one_hot.view(), &[0..4]).unwrap(), vec![7]);

        let flat = Array2::<f64>::from_elem((3, 10), 0.2);
        assert_eq!(classify_winner_take_all(flat.view(), &[0..3]).unwrap(), vec![0]);

        let two = array![[0.1, 0.9], [0.3, 0.2]];
        assert_eq!(classify_winner_take_all(two.view(), &[0..2]).unwrap(), vec![1]);
        assert_eq!(classify_winner_take_all(two.view(), &[0..1, 1..2]).unwrap(), vec![1, 0]);

        assert!(classify_winner_take_all(two.view(), &[1..1]).is_err());
        assert!(classify_winner_take_all(two.view(), &[0..3]).is_err());
    }

    #[test]
    fn validated_training_picks_from_grid() {
        let n = 200;
        let s = Array2::from_shape_fn((n, 3), |(i, j)| ((i * (j + 2)) as f64 * 0.37).sin());
        let t = Array2::from_shape_fn((n, 1), |(i, _)| 0.5 * s[[i, 0]] - 0.2 * s[[i, 2]] + 0.1);
        let m = train_readout_validated(s.view(), t.view(), &DEFAULT_LAMBDA_GRID, 0.2, None).unwrap();
        assert!(DEFAULT_LAMBDA_GRID.contains(&m.ridge_lambda()));
        assert_abs_diff_eq!(m.weights()[[0, 0]], 0.5, epsilon = 1e-3);
        assert!(train_readout_validated(s.view(), t.view(), &[], 0.2, None).is_err());
        assert!(train_readout_validated(s.view(), t.view(), &[1e-3], 1.0, None).is_err());
    }

    #[test]
    fn json_document_shape() {
        let m = ReadoutModel::new(array![[1.0, 2.0], [3.0, 4.0]], array![0.5, -0.5], 1e-6).unwrap();
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["channels"], 2);
        assert_eq!(json["nodes"], 2);
        assert_eq!(json["lambda"], 1e-6);
        assert_eq!(json["weights"][1][0], 3.0);
        assert_eq!(json["bias"][1], -0.5);
        let back: ReadoutModel = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);

        let bad = serde_json::json!({"channels": 1, "nodes": 2, "lambda": 0.0, "weights": [[1.0]], "bias": [0.0]});
        assert!(serde_json::from_value::<ReadoutModel>(bad).is_err());
    }
}

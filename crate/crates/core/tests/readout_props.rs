#![allow(clippy::single_range_in_vec_init)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use tdm_reservoir::readout::{
    classify_winner_take_all, predict, train_readout, train_readout_validated, ReadoutError, ReadoutModel,
    DEFAULT_LAMBDA_GRID,
};

fn problem(max_nodes: usize) -> impl Strategy<Value = (Array2<f64>, Array2<f64>)> {
    (1..=max_nodes, 1usize..=3).prop_flat_map(|(nodes, channels)| {
        let rows = 3 * nodes + 8;
        (
            prop::collection::vec(-1.0..1.0f64, rows * nodes),
            prop::collection::vec(-2.0..2.0f64, rows * channels),
        )
            .prop_map(move |(s, t)| {
                (
                    Array2::from_shape_vec((rows, nodes), s).unwrap(),
                    Array2::from_shape_vec((rows, channels), t).unwrap(),
                )
            })
    })
}

fn centered(a: &Array2<f64>) -> (DMatrix<f64>, Array1<f64>) {
    let mean = a.mean_axis(Axis(0)).unwrap();
    let c = a - &mean;
    (
        DMatrix::from_row_iterator(c.nrows(), c.ncols(), c.iter().copied()),
        mean,
    )
}

/// Ridge solution through the SVD of the centered states:
/// `W = V diag(s / (s^2 + lambda)) U^T Tc`; lambda = 0 gives the
/// pseudoinverse.
fn svd_oracle(s: &Array2<f64>, t: &Array2<f64>, lambda: f64) -> (DMatrix<f64>, DVector<f64>) {
    let (sc, smean) = centered(s);
    let (tc, tmean) = centered(t);
    let svd = sc.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let filt = DVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values
            .iter()
            .map(|&x| if x > 1e-12 { x / (x * x + lambda) } else { 0.0 }),
    );
    let w = v_t.transpose() * DMatrix::from_diagonal(&filt) * u.transpose() * tc; // nodes x channels
    let sm = DVector::from_iterator(smean.len(), smean.iter().copied());
    let tm = DVector::from_iterator(tmean.len(), tmean.iter().copied());
    let bias = tm - w.transpose() * sm;
    (w.transpose(), bias)
}

fn max_gap(model: &ReadoutModel, w: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let mut gap: f64 = 0.0;
    for ((r, c), v) in model.weights().indexed_iter() {
        gap = gap.max((v - w[(r, c)]).abs());
    }
    for (i, v) in model.bias().iter().enumerate() {
        gap = gap.max((v - b[i]).abs());
    }
    gap
}

fn objective(s: &Array2<f64>, t: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>, lambda: f64) -> f64 {
    let r = s.dot(&w.t()) + b - t;
    r.iter().map(|x| x * x).sum::<f64>() + lambda * w.iter().map(|x| x * x).sum::<f64>()
}

proptest! {
    #[test]
    fn unregularized_fit_matches_pseudoinverse((s, t) in problem(12)) {
        let model = train_readout(s.view(), t.view(), 0.0, None).unwrap();
        let (w, b) = svd_oracle(&s, &t, 0.0);
        prop_assert!(max_gap(&model, &w, &b) <= 1e-9);
    }

    #[test]
    fn ridge_fit_matches_filtered_svd((s, t) in problem(12), exp in -8i32..1) {
        let lambda = 10f64.powi(exp);
        let model = train_readout(s.view(), t.view(), lambda, None).unwrap();
        let (w, b) = svd_oracle(&s, &t, lambda);
        prop_assert!(max_gap(&model, &w, &b) <= 1e-9);
    }

    #[test]
    fn weight_norm_shrinks_with_lambda((s, t) in problem(10)) {
        let mut last = f64::INFINITY;
        for lambda in [1e-8, 1e-4, 1e-2, 1.0, 100.0] {
            let norm = train_readout(s.view(), t.view(), lambda, None).unwrap().weight_norm();
            prop_assert!(norm <= last * (1.0 + 1e-9));
            last = norm;
        }
    }

    #[test]
    fn solution_is_a_minimum(
        (s, t) in problem(8),
        dir in prop::collection::vec(-1.0..1.0f64, 8 * 3 + 3),
        eps in 1e-4..1e-2f64,
    ) {
        let lambda = 1e-3;
        let model = train_readout(s.view(), t.view(), lambda, None).unwrap();
        let w = model.weights().to_owned();
        let b = model.bias().clone();
        let best = objective(&s, &t, &w, &b, lambda);
        let (ch, n) = w.dim();
        let dw = Array2::from_shape_fn((ch, n), |(r, c)| dir[r * n + c]);
        let db = Array1::from_shape_fn(ch, |r| dir[8 * 3 + r]);
        for sign in [1.0, -1.0] {
            let moved = objective(&s, &t, &(&w + &(sign * eps * &dw)), &(&b + &(sign * eps * &db)), lambda);
            prop_assert!(moved >= best - 1e-9 * best.max(1.0));
        }
    }

    #[test]
    fn step_mask_equals_row_selection((s, t) in problem(8), keep_every in 2usize..4) {
        let keep: Vec<bool> = (0..s.nrows()).map(|n| n % keep_every != 0).collect();
        let rows: Vec<usize> = (0..s.nrows()).filter(|&n| keep[n]).collect();
        let a = train_readout(s.view(), t.view(), 1e-6, Some(&keep)).unwrap();
        let b = train_readout(s.select(Axis(0), &rows).view(), t.select(Axis(0), &rows).view(), 1e-6, None).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn validated_choice_comes_from_grid((s, t) in problem(8)) {
        let m = train_readout_validated(s.view(), t.view(), &DEFAULT_LAMBDA_GRID, 0.25, None).unwrap();
        prop_assert!(DEFAULT_LAMBDA_GRID.contains(&m.ridge_lambda()));
    }

    #[test]
    fn prediction_is_affine(
        (s, t) in problem(6),
        c in -3.0..3.0f64,
    ) {
        let model = train_readout(s.view(), t.view(), 1e-6, None).unwrap();
        let p = predict(s.view(), &model).unwrap();
        let zero = predict(Array2::zeros(s.dim()).view(), &model).unwrap();
        let pc = predict(s.mapv(|v| c * v).view(), &model).unwrap();
        for ((a, z), b) in p.iter().zip(zero.iter()).zip(pc.iter()) {
            prop_assert!((c * (a - z) + z - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn winner_take_all_ignores_positive_affine_maps(
        v in prop::collection::vec(-1.0..1.0f64, 60),
        scale in 0.1..10.0f64,
        shift in -5.0..5.0f64,
    ) {
        let out = Array2::from_shape_vec((12, 5), v).unwrap();
        let spans = vec![0..3, 3..7, 7..12];
        let a = classify_winner_take_all(out.view(), &spans).unwrap();
        let b = classify_winner_take_all(out.mapv(|x| scale * x + shift).view(), &spans).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn winner_take_all_breaks_ties_low() {
    let out = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 2.0, 1.0, 2.0, 2.0]).unwrap();
    assert_eq!(classify_winner_take_all(out.view(), &[0..2]).unwrap(), vec![1]);
}

#[test]
fn singular_system_without_penalty_is_numeric_error() {
    let s = Array2::from_shape_fn((20, 3), |(n, i)| if i == 2 { 0.0 } else { (n as f64).sin() + i as f64 });
    let t = Array2::from_shape_fn((20, 1), |(n, _)| n as f64);
    assert!(matches!(
        train_readout(s.view(), t.view(), 0.0, None),
        Err(ReadoutError::Numeric(_))
    ));
    assert!(train_readout(s.view(), t.view(), 1e-6, None).is_ok());
}

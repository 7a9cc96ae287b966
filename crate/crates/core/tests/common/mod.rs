//! Independent reference implementations used by several test targets.
#![allow(dead_code)]

use ndarray::Array2;
use tdm_reservoir::harness::{protocols, simulate_seed, ExperimentConfig};

/// Tenth-order NARMA written against explicitly zero-padded histories.
pub fn narma_direct(u: &[f64]) -> Vec<f64> {
    const PAD: usize = 10;
    let mut up = vec![0.0; PAD];
    up.extend_from_slice(u);
    let mut yp = vec![0.0; PAD + u.len()];
    for k in 0..u.len() - 1 {
        let j = k + PAD;
        let mut window = 0.0;
        for i in 0..10 {
            window += yp[j - i];
        }
        yp[j + 1] = 0.3 * yp[j] + 0.05 * yp[j] * window + 1.5 * up[j] * up[j - 9] + 0.1;
    }
    yp[PAD..].to_vec()
}

/// Channel response spelled out term by term; symbols outside the sequence
/// count as zero.
pub fn channel_direct(d: &[f64], a2: f64, a3: f64) -> Vec<f64> {
    let at = |n: isize| -> f64 {
        if n < 0 || n as usize >= d.len() {
            0.0
        } else {
            d[n as usize]
        }
    };
    (0..d.len() as isize)
        .map(|n| {
            let q = 0.08 * at(n + 2) - 0.12 * at(n + 1) + at(n) + 0.18 * at(n - 1) - 0.1 * at(n - 2)
                + 0.091 * at(n - 3)
                - 0.05 * at(n - 4)
                + 0.04 * at(n - 5)
                + 0.03 * at(n - 6)
                + 0.01 * at(n - 7);
            q + a2 * q * q + a3 * q * q * q
        })
        .collect()
}

pub fn measured_snr_db(clean: &[f64], noisy: &[f64]) -> f64 {
    let signal: f64 = clean.iter().map(|v| v * v).sum();
    let noise: f64 = clean.iter().zip(noisy).map(|(c, n)| (n - c).powi(2)).sum();
    10.0 * (signal / noise).log10()
}

/// Largest equal block size found by laying slots out one by one.
pub fn brute_max_nodes(slots: usize, k: usize) -> Option<usize> {
    let mut best = None;
    for n in 1..=slots {
        let mut used = 0;
        for task in 0..k {
            if task > 0 {
                used += 2;
            }
            used += n;
        }
        if used <= slots {
            best = Some(n);
        }
    }
    best
}

/// Self-coupled sine node evaluated slot by slot.
pub fn reservoir_direct(drives: &Array2<f64>, alpha: f64, beta: f64, phi: f64) -> Array2<f64> {
    let (steps, nodes) = drives.dim();
    let mut out = Array2::zeros((steps, nodes));
    for n in 0..steps {
        for i in 0..nodes {
            let prev = if n == 0 { 0.0 } else { out[[n - 1, i]] };
            out[[n, i]] = (alpha * prev + beta * drives[[n, i]] + phi).sin();
        }
    }
    out
}

/// Largest state and metric differences between a time-shared run and the
/// isolated single-task runs of each of its tasks, for one seed.
pub fn equivalence_gap(cfg: &ExperimentConfig, seed: u64) -> (f64, f64) {
    let shared = simulate_seed(cfg, seed).expect("time-shared run");
    let mut state_gap: f64 = 0.0;
    let mut metric_gap: f64 = 0.0;
    for (i, task) in shared.tasks.iter().enumerate() {
        let alone = simulate_seed(&protocols::isolate(cfg, i), seed).expect("single-task run");
        let alone = &alone.tasks[0];
        for (a, b) in [
            (&task.train_states, &alone.train_states),
            (&task.test_states, &alone.test_states),
        ] {
            assert_eq!(a.view().dim(), b.view().dim());
            let d = a
                .view()
                .iter()
                .zip(b.view())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            state_gap = state_gap.max(d);
        }
        metric_gap = metric_gap.max((task.report.value - alone.report.value).abs());
    }
    (state_gap, metric_gap)
}

/// Multitask protocols with short sequences, for quick checks.
pub fn small_protocol(k: usize) -> ExperimentConfig {
    let mut cfg = protocols::multitask(k, None, None).expect("k in 2..=4");
    for t in &mut cfg.tasks {
        t.train = t.train.min(600);
        t.test = t.test.map(|n| n.min(300));
        if t.source.kind().is_digit() {
            t.train = 60;
            t.test = Some(30);
        }
    }
    cfg
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{write_atomic, ResultRecord};
use super::HarnessError;
use crate::metrics::MetricName;

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub task: String,
    pub kind: String,
    /// `single` for k = 1, otherwise `P-k`.
    pub label: String,
    pub k: usize,
    pub nodes: usize,
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    pub metric: MetricName,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub rows: Vec<SummaryRow>,
    /// Files that could not be read as records, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
    pub written: Vec<PathBuf>,
}

fn label(k: usize) -> String {
    if k == 1 {
        "single".into()
    } else {
        format!("P-{k}")
    }
}

fn read_record(path: &Path) -> Result<ResultRecord, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

/// Tabulates every record in `records_dir` into `summary.csv` plus one
/// `series_<METRIC>.tsv` per metric under `out_dir`.
pub fn report(records_dir: &Path, out_dir: &Path) -> Result<ReportSummary, HarnessError> {
    let entries = fs::read_dir(records_dir).map_err(|source| HarnessError::Io {
        path: records_dir.to_owned(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".json") && !name.ends_with(".failed.json") && !name.starts_with('.')
        })
        .collect();
    paths.sort();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for path in paths {
        match read_record(&path) {
            Ok(rec) => rows.extend(rec.tasks.iter().map(|t| {
                SummaryRow {
                    task: t.id.to_string(),
                    kind: serde_json::to_value(t.kind)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default(),
                    label: label(rec.k),
                    k: rec.k,
                    nodes: t.node_count,
                    alpha: rec.config.reservoir.alpha,
                    beta: rec.config.reservoir.beta,
                    phi: rec.config.reservoir.phi,
                    metric: t.metric,
                    mean: t.mean,
                    std: t.std,
                    seeds: t.per_seed.len(),
                    digest: rec.digest.clone(),
                }
            })),
            Err(msg) => skipped.push((path, msg)),
        }
    }
    if rows.is_empty() {
        return Err(HarnessError::Report(format!(
            "no readable result records in {}",
            records_dir.display()
        )));
    }
    rows.sort_by(|a, b| (&a.task, a.k, &a.digest).cmp(&(&b.task, b.k, &b.digest)));

    let mut csv_out = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        csv_out
            .serialize(row)
            .map_err(|e| HarnessError::Report(e.to_string()))?;
    }
    let bytes = csv_out.into_inner().map_err(|e| HarnessError::Report(e.to_string()))?;
    let mut written = vec![write_atomic(out_dir, "summary.csv", &bytes)?];

    let mut by_metric: BTreeMap<MetricName, Vec<&SummaryRow>> = BTreeMap::new();
    for row in &rows {
        by_metric.entry(row.metric).or_default().push(row);
    }
    for (metric, rows) in by_metric {
        let mut text = String::from("task\tlabel\tk\tnodes\talpha\tbeta\tphi\tmean\tstd\n");
        for r in rows {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:e}\t{:e}\n",
                r.task, r.label, r.k, r.nodes, r.alpha, r.beta, r.phi, r.mean, r.std
            ));
        }
        written.push(write_atomic(out_dir, &format!("series_{metric}.tsv"), text.as_bytes())?);
    }
    Ok(ReportSummary { rows, skipped, written })
}

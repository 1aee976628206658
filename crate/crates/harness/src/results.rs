use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bop_elites::solvers::SolverKind;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{csv_err, io, HarnessError, Result};

pub const RESULTS_HEADER: [&str; 5] = ["problem_id", "solver", "iteration", "te", "evaluations"];
pub const SUMMARY_HEADER: [&str; 4] = ["solver", "iteration", "mean_te", "stderr_te"];

/// Total error of one solver run on one problem after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem_id: usize,
    pub solver: SolverKind,
    pub iteration: usize,
    pub te: f64,
    /// Cumulative true-function evaluations.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub solver: SolverKind,
    pub iteration: usize,
    pub mean_te: f64,
    pub stderr_te: f64,
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        (a.problem_id, a.solver, a.iteration).cmp(&(b.problem_id, b.solver, b.iteration))
    });
}

/// Mean total error and its standard error across problems, for every
/// (solver, iteration) present. A single problem has standard error 0.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(SolverKind, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.solver, r.iteration))
            .or_default()
            .push(r.te);
    }
    groups
        .into_iter()
        .map(|((solver, iteration), te)| {
            let n = te.len() as f64;
            let mean = te.iter().sum::<f64>() / n;
            let stderr_te = if te.len() < 2 {
                0.0
            } else {
                let var = te.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                var.sqrt() / n.sqrt()
            };
            SummaryRow {
                solver,
                iteration,
                mean_te: mean,
                stderr_te,
            }
        })
        .collect()
}

pub fn to_csv_bytes<T: Serialize>(rows: &[T], header: &[&str]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    fs::write(path, to_csv_bytes(rows, header)).map_err(io(path))
}

fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let schema = |line: usize, message: String| HarnessError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let file = fs::File::open(path).map_err(io(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let found = reader.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(schema(
            1,
            format!(
                "expected header '{}', found '{}'",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| schema(line, e.to_string()))?;
        let row: T = record
            .deserialize(Some(&found))
            .map_err(|e| schema(line, e.to_string()))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a results CSV, rejecting rows that break the schema.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let rows: Vec<ResultRow> = read_csv(path, &RESULTS_HEADER)?;
    for (k, r) in rows.iter().enumerate() {
        if !(r.te.is_finite() && r.te >= 0.0) || r.iteration == 0 {
            return Err(HarnessError::Schema {
                path: path.to_path_buf(),
                line: k + 2,
                message: format!("te must be finite and non-negative and iteration positive, got te={} iteration={}", r.te, r.iteration),
            });
        }
    }
    Ok(rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let rows: Vec<SummaryRow> = read_csv(path, &SUMMARY_HEADER)?;
    for (k, r) in rows.iter().enumerate() {
        if !(r.mean_te.is_finite() && r.stderr_te.is_finite() && r.stderr_te >= 0.0) {
            return Err(HarnessError::Schema {
                path: path.to_path_buf(),
                line: k + 2,
                message: "mean_te and stderr_te must be finite, stderr_te non-negative".into(),
            });
        }
    }
    Ok(rows)
}

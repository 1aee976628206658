use std::fs;
use std::path::{Path, PathBuf};

use bop_elites::benchmark::{default_grid, generate_problem, ProblemSpec};
use bop_elites::solvers::{run_solver_with, RunContext, SolverKind, SolverTrace};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Manifest};
use crate::error::{io, HarnessError, Result};
use crate::results::{sort_rows, write_csv, ResultRow, RESULTS_HEADER};

/// A solver run that stopped with an error; its rows are left out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub problem_id: usize,
    pub solver: SolverKind,
    pub message: String,
}

pub struct ProblemOutcome {
    pub problem_id: usize,
    pub spec: ProblemSpec,
    pub reachable_niches: usize,
    pub traces: Vec<SolverTrace>,
    pub failures: Vec<RunFailure>,
}

impl ProblemOutcome {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.traces
            .iter()
            .flat_map(|t| {
                t.rows.iter().map(|r| ResultRow {
                    problem_id: self.problem_id,
                    solver: t.solver,
                    iteration: r.iteration,
                    te: r.total_error,
                    evaluations: r.iteration,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    /// Sorted by problem, solver, iteration.
    pub rows: Vec<ResultRow>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentResults {
    pub fn results_csv(&self) -> Vec<u8> {
        crate::results::to_csv_bytes(&self.rows, &RESULTS_HEADER)
    }
}

/// Generates problem `index`, computes its ground truth, and runs every
/// configured solver from the same initial design.
pub fn run_problem(config: &ExperimentConfig, index: usize) -> Result<ProblemOutcome> {
    let solver_config = config.solver_config(index);
    let problem = generate_problem(solver_config.seed)?;
    let grid = default_grid();
    let ctx = RunContext::new(&problem, &grid, solver_config.points_per_dim)?;
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for &kind in &config.solvers {
        match run_solver_with(kind, &problem, &grid, &solver_config, &ctx) {
            Ok(trace) => traces.push(trace),
            Err(e) => {
                log::warn!("problem {index}, {kind}: {e}");
                failures.push(RunFailure {
                    problem_id: index,
                    solver: kind,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(ProblemOutcome {
        problem_id: index,
        spec: problem.to_spec(&grid),
        reachable_niches: ctx.truth.reachable_niches(),
        traces,
        failures,
    })
}

fn problem_stem(index: usize) -> String {
    format!("problem_{index:04}")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io(path))
}

/// Writes the problem files of a suite without running any solver.
pub fn generate_suite(problems: usize, master_seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let dir = out.join("problems");
    create_dir(&dir)?;
    let grid = default_grid();
    (0..problems)
        .map(|i| {
            let problem = generate_problem(master_seed.wrapping_add(i as u64))?;
            let path = dir.join(format!("{}.json", problem_stem(i)));
            write_json(&path, &problem.to_spec(&grid))?;
            Ok(path)
        })
        .collect()
}

#[derive(Serialize)]
struct TraceRecord {
    solver: SolverKind,
    iteration: usize,
    candidate: usize,
    x: String,
    y: f64,
    g: String,
    niche: usize,
    improved: bool,
    te: f64,
    active_niche: Option<usize>,
    hyperparams: Option<String>,
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn write_outcome(outcome: &ProblemOutcome, out: &Path, sweeps: bool) -> Result<()> {
    let stem = problem_stem(outcome.problem_id);
    write_json(
        &out.join("problems").join(format!("{stem}.json")),
        &outcome.spec,
    )?;

    let records: Vec<TraceRecord> = outcome
        .traces
        .iter()
        .flat_map(|t| {
            t.rows.iter().map(move |r| TraceRecord {
                solver: t.solver,
                iteration: r.iteration,
                candidate: r.candidate_index,
                x: join(&r.x),
                y: r.y,
                g: join(&r.g),
                niche: r.niche,
                improved: r.improved,
                te: r.total_error,
                active_niche: r.active_niche,
                hyperparams: r
                    .hyperparams
                    .as_ref()
                    .map(|h| serde_json::to_string(h).expect("hyperparameters serialise")),
            })
        })
        .collect();
    let header = [
        "solver",
        "iteration",
        "candidate",
        "x",
        "y",
        "g",
        "niche",
        "improved",
        "te",
        "active_niche",
        "hyperparams",
    ];
    write_csv(
        &out.join("traces").join(format!("{stem}.csv")),
        &records,
        &header,
    )?;

    if sweeps {
        for t in &outcome.traces {
            write_sweeps(
                &out.join("sweeps").join(format!("{stem}_{}.csv", t.solver)),
                t,
            )?;
        }
    }
    Ok(())
}

/// One row per scored candidate per iteration: the total acquisition value
/// and its per-niche terms.
fn write_sweeps(path: &Path, trace: &SolverTrace) -> Result<()> {
    let niches = trace.archive.grid().niche_count();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "iteration".to_string(),
        "candidate".to_string(),
        "total".to_string(),
    ];
    header.extend((0..niches).map(|c| format!("niche_{c}")));
    w.write_record(&header).expect("in-memory write");
    for sweep in &trace.sweeps {
        for (candidate, score) in sweep.scores.iter().enumerate() {
            if let Some(s) = score {
                let mut rec = vec![
                    sweep.iteration.to_string(),
                    candidate.to_string(),
                    s.total.to_string(),
                ];
                rec.extend(s.per_niche.iter().map(f64::to_string));
                w.write_record(&rec).expect("in-memory write");
            }
        }
    }
    fs::write(path, w.into_inner().expect("in-memory flush")).map_err(io(path))
}

/// Runs the whole experiment on a pool of `config.workers` threads and
/// writes problems, per-problem traces, `results.csv`, `failures.csv` and
/// `manifest.json` under `config.out`.
///
/// Output does not depend on the worker count: every problem is
/// seeded independently and rows are sorted before writing.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let out = &config.out;
    for sub in ["problems", "traces"] {
        create_dir(&out.join(sub))?;
    }
    if config.solver.record_sweeps {
        create_dir(&out.join("sweeps"))?;
    }
    Manifest::new(config).write(&out.join("manifest.json"))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| {
            HarnessError::Invalid(format!("cannot start {} workers: {e}", config.workers))
        })?;
    let outcomes: Vec<Result<(Vec<ResultRow>, Vec<RunFailure>)>> = pool.install(|| {
        (0..config.problems)
            .into_par_iter()
            .map(|i| {
                let outcome = run_problem(config, i)?;
                write_outcome(&outcome, out, config.solver.record_sweeps)?;
                log::info!(
                    "problem {i} done ({} reachable niches)",
                    outcome.reachable_niches
                );
                Ok((outcome.rows(), outcome.failures))
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        let (r, f) = outcome?;
        rows.extend(r);
        failures.extend(f);
    }
    sort_rows(&mut rows);
    failures.sort_by_key(|f| (f.problem_id, f.solver));

    let results = ExperimentResults { rows, failures };
    let path = out.join("results.csv");
    fs::write(&path, results.results_csv()).map_err(io(&path))?;
    write_csv(
        &out.join("failures.csv"),
        &results.failures,
        &["problem_id", "solver", "message"],
    )?;
    Ok(results)
}

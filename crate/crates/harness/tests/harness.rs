use std::fs;
use std::path::Path;
use std::process::Command;

use bop_elites::solvers::{SolverConfig, SolverKind};
use bop_elites_harness::config::{ExperimentConfig, Manifest};
use bop_elites_harness::results::{write_csv, SUMMARY_HEADER};
use bop_elites_harness::{
    emit_plots, read_results, read_summary, render_svg, run_experiment, run_problem, summarize,
    HarnessError, ResultRow, Scale, SummaryRow,
};

fn small(out: &Path, problems: usize, workers: usize) -> ExperimentConfig {
    ExperimentConfig {
        problems,
        solvers: SolverKind::ALL.to_vec(),
        solver: SolverConfig {
            budget: 9,
            points_per_dim: 150,
            restarts: 3,
            ..SolverConfig::default()
        },
        master_seed: 40,
        workers,
        out: out.to_path_buf(),
    }
}

fn row(problem_id: usize, solver: SolverKind, iteration: usize, te: f64) -> ResultRow {
    ResultRow {
        problem_id,
        solver,
        iteration,
        te,
        evaluations: iteration,
    }
}

#[test]
fn solvers_share_the_initial_design() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(dir.path(), 1, 1);
    config.solver.budget = 6;
    let outcome = run_problem(&config, 0).unwrap();
    assert_eq!(outcome.rows().len(), 3 * 6);
    let first: Vec<_> = outcome
        .traces
        .iter()
        .map(|t| {
            t.rows[..5]
                .iter()
                .map(|r| (r.x.clone(), r.y, r.g.clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    assert_eq!(first[0], first[1]);
    assert_eq!(first[1], first[2]);
}

#[test]
fn experiment_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(dir.path(), 2, 1);
    let results = run_experiment(&config).unwrap();
    assert_eq!(results.rows.len(), 2 * 3 * 9);
    assert!(results.failures.is_empty());
    for f in [
        "results.csv",
        "failures.csv",
        "manifest.json",
        "problems/problem_0001.json",
        "traces/problem_0000.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "problem_id,solver,iteration,te,evaluations"
    );

    // Parsing the file back loses nothing.
    assert_eq!(
        read_results(&dir.path().join("results.csv")).unwrap(),
        results.rows
    );
    let manifest = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.config, config);
    assert_eq!(manifest.problem_seeds, vec![40, 41]);
}

#[test]
fn worker_count_and_replay_do_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    run_experiment(&small(a.path(), 3, 1)).unwrap();
    run_experiment(&small(b.path(), 3, 3)).unwrap();
    let mut replay = Manifest::read(&a.path().join("manifest.json"))
        .unwrap()
        .config;
    replay.out = c.path().to_path_buf();
    run_experiment(&replay).unwrap();
    let bytes = |d: &Path, f: &str| fs::read(d.join(f)).unwrap();
    for f in [
        "results.csv",
        "traces/problem_0002.csv",
        "problems/problem_0001.json",
    ] {
        assert_eq!(bytes(a.path(), f), bytes(b.path(), f), "{f}");
        assert_eq!(bytes(a.path(), f), bytes(c.path(), f), "{f}");
    }
}

#[test]
fn summary_statistics() {
    use SolverKind::BopElites as B;
    let single = summarize(&[row(0, B, 1, 5.0), row(0, B, 2, 3.0)]);
    assert!(single.iter().all(|r| r.stderr_te == 0.0));
    let two = summarize(&[row(0, B, 1, 2.0), row(1, B, 1, 4.0)]);
    assert_eq!(
        two,
        vec![SummaryRow {
            solver: B,
            iteration: 1,
            mean_te: 3.0,
            stderr_te: 1.0
        }]
    );
}

#[test]
fn summary_matches_independent_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let results = run_experiment(&small(dir.path(), 4, 1)).unwrap();
    for s in summarize(&results.rows) {
        let te: Vec<f64> = results
            .rows
            .iter()
            .filter(|r| r.solver == s.solver && r.iteration == s.iteration)
            .map(|r| r.te)
            .collect();
        // Welford's running mean and variance, unlike the two-pass summary.
        let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
        for v in &te {
            n += 1.0;
            let d = v - mean;
            mean += d / n;
            m2 += d * (v - mean);
        }
        let se = (m2 / (n - 1.0)).sqrt() / n.sqrt();
        assert_eq!(te.len(), 4);
        assert!((s.mean_te - mean).abs() <= 1e-9);
        assert!((s.stderr_te - se).abs() <= 1e-9);
    }
}

#[test]
fn malformed_results_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "problem_id,solver,iteration,te,evaluations\n0,bop-elites,1,2.5,1\n0,bop-elites,two,2.0,2\n").unwrap();
    match read_results(&path) {
        Err(HarnessError::Schema { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected schema error, got {other:?}"),
    }
    fs::write(&path, "problem_id,solver,iteration,te\n").unwrap();
    assert!(matches!(
        read_results(&path),
        Err(HarnessError::Schema { line: 1, .. })
    ));
    fs::write(
        &path,
        "problem_id,solver,iteration,te,evaluations\n0,simplex,1,2.5,1\n",
    )
    .unwrap();
    assert!(matches!(
        read_results(&path),
        Err(HarnessError::Schema { line: 2, .. })
    ));
    fs::write(
        &path,
        "problem_id,solver,iteration,te,evaluations\n0,sequential,1,-1,1\n",
    )
    .unwrap();
    assert!(matches!(
        read_results(&path),
        Err(HarnessError::Schema { line: 2, .. })
    ));
}

fn decreasing_summary() -> Vec<SummaryRow> {
    SolverKind::ALL
        .iter()
        .enumerate()
        .flat_map(|(k, &solver)| {
            (1..=12).map(move |i| SummaryRow {
                solver,
                iteration: i,
                mean_te: 40.0 / (i * (k + 1)) as f64
                    - if i == 12 {
                        40.0 / (12 * (k + 1)) as f64
                    } else {
                        0.0
                    },
                stderr_te: 0.5,
            })
        })
        .collect()
}

fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
    svg.lines()
        .filter(|l| l.starts_with("<polyline"))
        .map(|l| {
            let pts = l
                .split("points=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap();
            pts.split(' ')
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn plots_have_one_line_and_band_per_solver() {
    let summary = decreasing_summary();
    for scale in [Scale::Linear, Scale::Log] {
        let svg = render_svg(&summary, scale).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("<polygon").count(), 3);
        assert_eq!(svg, render_svg(&summary, scale).unwrap());
        for line in polylines(&svg) {
            assert_eq!(line.len(), 12);
            // Falling error moves the line down the page: y grows.
            assert!(line.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0));
            assert!(line.iter().all(|(x, y)| x.is_finite() && y.is_finite()));
        }
    }
    assert!(render_svg(&[], Scale::Linear).is_err());
}

#[test]
fn log_plot_clamps_zero_error() {
    let svg = render_svg(&decreasing_summary(), Scale::Log).unwrap();
    // Every series ends at exactly zero; all three land on the same floor.
    let ends: Vec<f64> = polylines(&svg)
        .iter()
        .map(|l| l.last().unwrap().1)
        .collect();
    assert!(ends.iter().all(|y| *y == ends[0]));
    assert!(svg.contains(">1e-6<") || svg.contains(">1e-5<"));
}

#[test]
fn plots_round_trip_through_summary_file() {
    let dir = tempfile::tempdir().unwrap();
    let summary = decreasing_summary();
    let path = dir.path().join("summary.csv");
    write_csv(&path, &summary, &SUMMARY_HEADER).unwrap();
    assert_eq!(read_summary(&path).unwrap(), summary);
    let [linear, log] = emit_plots(&summary, dir.path()).unwrap();
    assert!(fs::read_to_string(linear).unwrap().starts_with("<svg"));
    assert!(fs::read_to_string(log).unwrap().starts_with("<svg"));
}

#[test]
fn command_line_round_trip() {
    let exe = env!("CARGO_BIN_EXE_bop-elites");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = Command::new(exe)
        .args([
            "run",
            "--problems",
            "1",
            "--budget",
            "7",
            "--grid-points",
            "120",
            "--restarts",
            "2",
            "--workers",
            "1",
        ])
        .args([
            "--solvers",
            "bop-elites,independent",
            "--seed",
            "9",
            "--sweeps",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = read_results(&out.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 7);
    assert!(out.join("sweeps/problem_0000_bop-elites.csv").is_file());
    assert!(out.join("te_log.svg").is_file());

    let summary = Command::new(exe)
        .arg("summarize")
        .arg(out.join("results.csv"))
        .output()
        .unwrap();
    assert!(summary.status.success());
    assert!(String::from_utf8(summary.stdout)
        .unwrap()
        .starts_with("solver,iteration,mean_te,stderr_te\n"));

    let gen = Command::new(exe)
        .args(["generate", "--problems", "3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(gen.success());
    assert!(dir.path().join("problems/problem_0002.json").is_file());

    let bad = Command::new(exe)
        .args(["run", "--solvers", "simplex"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    let missing = Command::new(exe)
        .args(["summarize", "/nonexistent/results.csv"])
        .output()
        .unwrap();
    assert!(String::from_utf8(missing.stderr)
        .unwrap()
        .contains("/nonexistent/results.csv"));
}

//! Experiment harness for `bop-elites`.
//!
//! Generates suites of random benchmark problems, runs the solvers over
//! them, writes per-iteration results as CSV, summarises mean total error
//! with standard errors, and renders the summaries as SVG line plots.

pub mod config;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod results;

pub use config::{ExperimentConfig, Manifest};
pub use error::{HarnessError, Result};
pub use experiment::{
    generate_suite, run_experiment, run_problem, ExperimentResults, ProblemOutcome, RunFailure,
};
pub use plot::{emit_plots, render_svg, Scale};
pub use results::{read_results, read_summary, summarize, ResultRow, SummaryRow};

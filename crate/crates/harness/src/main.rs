use std::path::PathBuf;
use std::process::ExitCode;

use bop_elites::solvers::SolverKind;
use bop_elites_harness::config::{ExperimentConfig, Manifest};
use bop_elites_harness::results::{write_csv, SUMMARY_HEADER};
use bop_elites_harness::{
    emit_plots, generate_suite, read_results, read_summary, run_experiment, summarize, Result,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bop-elites",
    version,
    about = "Quality-diversity Bayesian optimisation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a suite of random benchmark problems as JSON.
    Generate {
        #[arg(long, default_value_t = 100)]
        problems: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run the solvers over a problem suite.
    Run(RunArgs),
    /// Mean total error and standard error per solver and iteration.
    Summarize {
        /// A results.csv written by `run`.
        results: PathBuf,
        /// Where to write the summary; printed to stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a summary as linear and log-scale SVG plots.
    Plot {
        /// A summary CSV written by `summarize`.
        summary: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    problems: Option<usize>,
    /// Total evaluations per run, initial design included.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    /// Candidate points per input dimension.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Random hyperparameter restarts per model per iteration.
    #[arg(long)]
    restarts: Option<usize>,
    /// Master seed; problem i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<SolverKind>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write every iteration's acquisition values.
    #[arg(long)]
    sweeps: bool,
    /// Replay the configuration of an earlier run; other flags override it.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut c = match &self.manifest {
            Some(path) => Manifest::read(path)?.config,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.problems {
            c.problems = v;
        }
        if let Some(v) = self.budget {
            c.solver.budget = v;
        }
        if let Some(v) = self.n0 {
            c.solver.n0 = v;
        }
        if let Some(v) = self.grid_points {
            c.solver.points_per_dim = v;
        }
        if let Some(v) = self.restarts {
            c.solver.restarts = v;
        }
        if let Some(v) = self.seed {
            c.master_seed = v;
        }
        if let Some(v) = self.solvers {
            c.solvers = v;
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        if let Some(v) = self.workers {
            c.workers = v;
        }
        c.solver.record_sweeps |= self.sweeps;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            problems,
            seed,
            out,
        } => {
            let paths = generate_suite(problems, seed, &out)?;
            println!(
                "wrote {} problems to {}",
                paths.len(),
                out.join("problems").display()
            );
        }
        Command::Run(args) => {
            let config = args.into_config()?;
            let results = run_experiment(&config)?;
            let summary = summarize(&results.rows);
            write_csv(&config.out.join("summary.csv"), &summary, &SUMMARY_HEADER)?;
            emit_plots(&summary, &config.out)?;
            for kind in &config.solvers {
                if let Some(last) = summary
                    .iter()
                    .filter(|r| r.solver == *kind)
                    .max_by_key(|r| r.iteration)
                {
                    println!(
                        "{kind}: final mean TE {:.6} ± {:.6}",
                        last.mean_te, last.stderr_te
                    );
                }
            }
            if !results.failures.is_empty() {
                eprintln!(
                    "{} solver runs failed; see failures.csv",
                    results.failures.len()
                );
            }
            println!("results in {}", config.out.display());
        }
        Command::Summarize { results, out } => {
            let summary = summarize(&read_results(&results)?);
            match out {
                Some(path) => write_csv(&path, &summary, &SUMMARY_HEADER)?,
                None => print!(
                    "{}",
                    String::from_utf8(bop_elites_harness::results::to_csv_bytes(
                        &summary,
                        &SUMMARY_HEADER
                    ))
                    .expect("CSV is UTF-8")
                ),
            }
        }
        Command::Plot { summary, out } => {
            for path in emit_plots(&read_summary(&summary)?, &out)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

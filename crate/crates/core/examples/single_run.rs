//! Runs every solver once on one generated problem and prints the TE trace.
//!
//! `cargo run --release --example single_run -- [seed]`

use std::time::Instant;

use bop_elites::benchmark::{default_grid, generate_problem};
use bop_elites::solvers::{run_solver_with, RunContext, SolverConfig, SolverKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(0);
    let problem = generate_problem(seed)?;
    let grid = default_grid();
    let config = SolverConfig {
        seed,
        ..SolverConfig::default()
    };
    let ctx = RunContext::new(&problem, &grid, config.points_per_dim)?;
    println!("reachable niches: {}", ctx.truth.reachable_niches());
    for kind in SolverKind::ALL {
        let start = Instant::now();
        let trace = run_solver_with(kind, &problem, &grid, &config, &ctx)?;
        let te: Vec<String> = trace
            .rows
            .iter()
            .map(|r| format!("{:.3}", r.total_error))
            .collect();
        println!("{kind} ({:.1?}): {}", start.elapsed(), te.join(" "));
    }
    Ok(())
}

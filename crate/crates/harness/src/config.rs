use std::fs;
use std::path::{Path, PathBuf};

use bop_elites::solvers::{SolverConfig, SolverKind};
use serde::{Deserialize, Serialize};

use crate::error::{io, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problems: usize,
    pub solvers: Vec<SolverKind>,
    /// Shared solver settings. The `seed` field is replaced per problem.
    pub solver: SolverConfig,
    pub master_seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problems: 100,
            solvers: SolverKind::ALL.to_vec(),
            solver: SolverConfig::default(),
            master_seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Seed of problem `index`: the master seed offset by the index.
    pub fn problem_seed(&self, index: usize) -> u64 {
        self.master_seed.wrapping_add(index as u64)
    }

    pub fn problem_seeds(&self) -> Vec<u64> {
        (0..self.problems).map(|i| self.problem_seed(i)).collect()
    }

    /// Solver settings for problem `index`.
    pub fn solver_config(&self, index: usize) -> SolverConfig {
        SolverConfig {
            seed: self.problem_seed(index),
            ..self.solver.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems == 0 {
            return Err(HarnessError::Invalid("need at least one problem".into()));
        }
        if self.solvers.is_empty() {
            return Err(HarnessError::Invalid("need at least one solver".into()));
        }
        let mut sorted = self.solvers.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.solvers.len() {
            return Err(HarnessError::Invalid(format!(
                "duplicate solver in {:?}",
                self.solvers
            )));
        }
        if self.workers == 0 {
            return Err(HarnessError::Invalid("need at least one worker".into()));
        }
        let ppd = self.solver.points_per_dim;
        self.solver.validate(ppd)?;
        Ok(())
    }
}

/// Everything needed to replay an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub problem_seeds: Vec<u64>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            problem_seeds: config.problem_seeds(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text + "\n").map_err(io(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io(path))?;
        let manifest: Self = serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if manifest.problem_seeds != manifest.config.problem_seeds() {
            return Err(HarnessError::Invalid(format!(
                "{}: problem seeds do not match the master seed",
                path.display()
            )));
        }
        Ok(manifest)
    }
}

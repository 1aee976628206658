//! The three solver loops: BOP-Elites, sequential niche optimisation and
//! independent niche optimisation.
//!
//! All three start from the same seeded initial design, evaluate exactly
//! `budget` points, never revisit a candidate, and record the total error
//! after every evaluation. They differ only in what they model and score:
//!
//! * `BopElites` trains shared objective/feature GPs and maximises EJIE.
//! * `Sequential` trains the same shared GPs but scores one active niche per
//!   iteration, rotating round-robin by niche index.
//! * `Independent` rotates the same way, but niche `c` trains its GPs only on
//!   the initial design plus the points chosen during its own turns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquisition::{self, AcquisitionScore};
use crate::archive::{compute_ground_truth, EliteArchive, GroundTruth, DEFAULT_F_MIN};
use crate::domain::{discretize, sample_initial_indices, CandidateSet, Dataset, Problem};
use crate::error::{Error, Result};
use crate::gp::{train_hyperparams, GpModel, HyperBounds, KernelHyperparams, BASE_RELATIVE_JITTER};
use crate::niche::NicheGrid;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    BopElites,
    Sequential,
    Independent,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [
        SolverKind::BopElites,
        SolverKind::Sequential,
        SolverKind::Independent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::BopElites => "bop-elites",
            SolverKind::Sequential => "sequential",
            SolverKind::Independent => "independent",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Size of the random initial design.
    pub n0: usize,
    /// Total number of true-function evaluations, initial design included.
    pub budget: usize,
    pub points_per_dim: usize,
    pub gp_init: KernelHyperparams,
    pub bounds: HyperBounds,
    /// Random hyperparameter restarts per GP per iteration.
    pub restarts: usize,
    pub seed: u64,
    pub f_min: f64,
    /// Keep the full acquisition sweep of every iteration in the trace.
    #[serde(default)]
    pub record_sweeps: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n0: 5,
            budget: 40,
            points_per_dim: 1000,
            gp_init: KernelHyperparams::isotropic(0.5, 0.01),
            bounds: HyperBounds::default(),
            restarts: 100,
            seed: 0,
            f_min: DEFAULT_F_MIN,
            record_sweeps: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n_candidates: usize) -> Result<()> {
        if self.n0 == 0 || self.n0 > self.budget || self.budget > n_candidates {
            return Err(Error::InvalidArgument(format!(
                "need 0 < n0 ≤ budget ≤ candidates, got n0={}, budget={}, candidates={n_candidates}",
                self.n0, self.budget
            )));
        }
        Ok(())
    }
}

/// Hyperparameters the surrogates were trained to before choosing a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHyperparams {
    pub objective: KernelHyperparams,
    pub features: Vec<KernelHyperparams>,
}

/// One evaluation of the true functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 1-based; equals the number of evaluations so far.
    pub iteration: usize,
    pub candidate_index: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub g: Vec<f64>,
    pub niche: usize,
    pub improved: bool,
    pub total_error: f64,
    /// The niche being optimised, for the round-robin solvers.
    pub active_niche: Option<usize>,
    /// `None` for initial-design rows.
    pub hyperparams: Option<ModelHyperparams>,
}

/// Acquisition values over the candidate set at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub iteration: usize,
    pub scores: Vec<Option<AcquisitionScore>>,
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub solver: SolverKind,
    pub rows: Vec<TraceRow>,
    pub archive: EliteArchive,
    pub sweeps: Vec<SweepRecord>,
}

impl SolverTrace {
    pub fn final_total_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.total_error)
    }
}

/// Candidates and ground truth shared by every solver run on one problem.
pub struct RunContext {
    pub candidates: CandidateSet,
    pub truth: GroundTruth,
}

impl RunContext {
    pub fn new(problem: &dyn Problem, grid: &NicheGrid, points_per_dim: usize) -> Result<Self> {
        let candidates = discretize(problem.domain(), points_per_dim)?;
        let truth = compute_ground_truth(problem, &candidates, grid)?;
        Ok(Self { candidates, truth })
    }
}

struct Surrogates {
    objective: GpModel,
    features: Vec<GpModel>,
}

impl Surrogates {
    fn hyperparams(&self) -> ModelHyperparams {
        ModelHyperparams {
            objective: self.objective.hyperparams().clone(),
            features: self
                .features
                .iter()
                .map(|m| m.hyperparams().clone())
                .collect(),
        }
    }
}

fn train_one(x: &[Vec<f64>], y: Vec<f64>, config: &SolverConfig, seed: u64) -> Result<GpModel> {
    let hp = train_hyperparams(
        x,
        &y,
        &config.gp_init,
        &config.bounds,
        config.restarts,
        seed,
    )?;
    let jitter = BASE_RELATIVE_JITTER * hp.signal_variance;
    GpModel::fit(x.to_vec(), y, hp, jitter)
}

/// Trains the objective GP and one GP per feature on `data`. Restart seeds
/// depend only on the run seed, the iteration and the model slot, so the
/// solvers see identical restarts on identical data.
fn train_surrogates(data: &Dataset, config: &SolverConfig, iteration: usize) -> Result<Surrogates> {
    let x = data.inputs();
    let feature_dim = data.observations()[0].g.len();
    let seed = |slot: usize| derive_seed(config.seed, &[iteration as u64, slot as u64]);
    let objective = train_one(&x, data.objectives(), config, seed(0))?;
    let features = (0..feature_dim)
        .map(|j| train_one(&x, data.feature(j), config, seed(j + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Surrogates {
        objective,
        features,
    })
}

fn single_niche_scorer<'a>(
    models: &'a Surrogates,
    niche: &'a crate::niche::NicheId,
    archive: &'a EliteArchive,
) -> impl Fn(&[f64]) -> Result<AcquisitionScore> + Sync + 'a {
    move |x| {
        let (obj, feats) = acquisition::posteriors(x, &models.objective, &models.features)?;
        acquisition::single_niche_score(&obj, &feats, niche, archive)
    }
}

/// Runs one solver with a precomputed candidate set and ground truth.
pub fn run_solver_with(
    kind: SolverKind,
    problem: &dyn Problem,
    grid: &NicheGrid,
    config: &SolverConfig,
    ctx: &RunContext,
) -> Result<SolverTrace> {
    let candidates = &ctx.candidates;
    config.validate(candidates.len())?;
    if problem.feature_dim() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: problem.feature_dim(),
        });
    }
    let niche_count = grid.niche_count();

    let mut archive = EliteArchive::new(grid.clone(), config.f_min);
    let mut evaluated = vec![false; candidates.len()];
    let mut shared = Dataset::new();
    let mut rows = Vec::with_capacity(config.budget);
    let mut sweeps = Vec::new();

    let record = |idx: usize,
                  active_niche: Option<usize>,
                  hyperparams: Option<ModelHyperparams>,
                  archive: &mut EliteArchive,
                  evaluated: &mut Vec<bool>,
                  rows: &mut Vec<TraceRow>|
     -> Result<crate::domain::Observation> {
        let obs = problem.evaluate(candidates.get(idx))?;
        evaluated[idx] = true;
        let update = archive.update(&obs)?;
        rows.push(TraceRow {
            iteration: rows.len() + 1,
            candidate_index: idx,
            x: obs.x.clone(),
            y: obs.y,
            g: obs.g.clone(),
            niche: update.niche.index,
            improved: update.improved,
            total_error: archive.total_error(&ctx.truth),
            active_niche,
            hyperparams,
        });
        Ok(obs)
    };

    for idx in sample_initial_indices(candidates, config.n0, config.seed)? {
        let obs = record(idx, None, None, &mut archive, &mut evaluated, &mut rows)?;
        shared.push(obs)?;
    }
    // Independent niche optimisation keeps one dataset per niche, all seeded
    // with the shared initial design.
    let mut per_niche = if kind == SolverKind::Independent {
        vec![shared.clone(); niche_count]
    } else {
        Vec::new()
    };

    for iteration in config.n0 + 1..=config.budget {
        let active = (iteration - config.n0 - 1) % niche_count;
        let (models, active_niche) = match kind {
            SolverKind::BopElites => (train_surrogates(&shared, config, iteration)?, None),
            SolverKind::Sequential => (train_surrogates(&shared, config, iteration)?, Some(active)),
            SolverKind::Independent => (
                train_surrogates(&per_niche[active], config, iteration)?,
                Some(active),
            ),
        };

        let scores = match active_niche {
            None => acquisition::score_candidates(candidates, &evaluated, |x| {
                acquisition::ejie(x, &models.objective, &models.features, &archive)
            })?,
            Some(c) => {
                let niche = grid.niche(c);
                acquisition::score_candidates(
                    candidates,
                    &evaluated,
                    single_niche_scorer(&models, &niche, &archive),
                )?
            }
        };
        let (idx, _) = acquisition::argmax_scores(&scores)?;
        if config.record_sweeps {
            sweeps.push(SweepRecord { iteration, scores });
        }

        let obs = record(
            idx,
            active_niche,
            Some(models.hyperparams()),
            &mut archive,
            &mut evaluated,
            &mut rows,
        )?;
        if kind == SolverKind::Independent {
            per_niche[active].push(obs)?;
        } else {
            shared.push(obs)?;
        }
    }

    Ok(SolverTrace {
        solver: kind,
        rows,
        archive,
        sweeps,
    })
}

/// Runs one solver, discretising the domain and computing ground truth first.
pub fn run_solver(
    kind: SolverKind,
    problem: &dyn Problem,
    grid: &NicheGrid,
    config: &SolverConfig,
) -> Result<SolverTrace> {
    let ctx = RunContext::new(problem, grid, config.points_per_dim)?;
    run_solver_with(kind, problem, grid, config, &ctx)
}

pub fn run_bop_elites(
    problem: &dyn Problem,
    grid: &NicheGrid,
    config: &SolverConfig,
) -> Result<SolverTrace> {
    run_solver(SolverKind::BopElites, problem, grid, config)
}

pub fn run_sequential(
    problem: &dyn Problem,
    grid: &NicheGrid,
    config: &SolverConfig,
) -> Result<SolverTrace> {
    run_solver(SolverKind::Sequential, problem, grid, config)
}

pub fn run_independent(
    problem: &dyn Problem,
    grid: &NicheGrid,
    config: &SolverConfig,
) -> Result<SolverTrace> {
    run_solver(SolverKind::Independent, problem, grid, config)
}

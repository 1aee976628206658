//! Best-observed solution per niche and the total-error score.

use crate::domain::{CandidateSet, Observation, Problem};
use crate::error::{Error, Result};
use crate::niche::{NicheGrid, NicheId};

/// Default valuation of a niche that holds no elite.
pub const DEFAULT_F_MIN: f64 = 0.0;

/// The current elites, one optional observation per niche.
#[derive(Debug, Clone, PartialEq)]
pub struct EliteArchive {
    grid: NicheGrid,
    elites: Vec<Option<Observation>>,
    f_min: f64,
}

/// Outcome of offering an observation to the archive.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub niche: NicheId,
    pub improved: bool,
}

impl EliteArchive {
    pub fn new(grid: NicheGrid, f_min: f64) -> Self {
        let elites = vec![None; grid.niche_count()];
        Self {
            grid,
            elites,
            f_min,
        }
    }

    pub fn grid(&self) -> &NicheGrid {
        &self.grid
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    /// Classifies `obs` by its observed features and stores it if its niche
    /// is empty or it strictly beats the incumbent.
    pub fn update(&mut self, obs: &Observation) -> Result<Update> {
        let niche = self.grid.classify(&obs.g)?;
        if !obs.y.is_finite() {
            return Err(Error::NonFinite(format!("objective value at {:?}", obs.x)));
        }
        let slot = &mut self.elites[niche.index];
        let improved = slot.as_ref().is_none_or(|e| obs.y > e.y);
        if improved {
            *slot = Some(obs.clone());
        }
        Ok(Update { niche, improved })
    }

    pub fn elite(&self, niche: usize) -> Option<&Observation> {
        self.elites[niche].as_ref()
    }

    pub fn elites(&self) -> &[Option<Observation>] {
        &self.elites
    }

    /// Objective of the niche's elite, or `f_min` when the niche is empty.
    pub fn elite_value(&self, niche: usize) -> f64 {
        self.elites[niche].as_ref().map_or(self.f_min, |e| e.y)
    }

    /// Σ over niches with a true optimum of `y* − elite_value`, both sides
    /// floored at `f_min`.
    ///
    /// An empty niche is worth `f_min`, so a stored elite below `f_min` must
    /// not count as worse than nothing. The floor keeps the sum non-negative
    /// and non-increasing as elites improve, also for objectives that dip
    /// below `f_min`.
    pub fn total_error(&self, truth: &GroundTruth) -> f64 {
        truth
            .optima
            .iter()
            .enumerate()
            .filter_map(|(c, opt)| {
                opt.as_ref()
                    .map(|o| o.observation.y.max(self.f_min) - self.elite_value(c).max(self.f_min))
            })
            .sum()
    }
}

/// True optimum of one niche over the candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueOptimum {
    pub candidate_index: usize,
    pub observation: Observation,
}

/// Per-niche true optima; `None` where no candidate reaches the niche.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub optima: Vec<Option<TrueOptimum>>,
}

impl GroundTruth {
    pub fn reachable_niches(&self) -> usize {
        self.optima.iter().filter(|o| o.is_some()).count()
    }

    /// An archive holding exactly the true optima.
    pub fn to_archive(&self, grid: &NicheGrid, f_min: f64) -> EliteArchive {
        EliteArchive {
            grid: grid.clone(),
            elites: self
                .optima
                .iter()
                .map(|o| o.as_ref().map(|t| t.observation.clone()))
                .collect(),
            f_min,
        }
    }
}

/// Exhaustive search of every candidate; ties go to the lowest index.
pub fn compute_ground_truth(
    problem: &dyn Problem,
    candidates: &CandidateSet,
    grid: &NicheGrid,
) -> Result<GroundTruth> {
    let mut optima: Vec<Option<TrueOptimum>> = vec![None; grid.niche_count()];
    for (i, x) in candidates.points().iter().enumerate() {
        let obs = problem.evaluate(x)?;
        let niche = grid.classify(&obs.g)?;
        let slot = &mut optima[niche.index];
        if slot.as_ref().is_none_or(|o| obs.y > o.observation.y) {
            *slot = Some(TrueOptimum {
                candidate_index: i,
                observation: obs,
            });
        }
    }
    Ok(GroundTruth { optima })
}

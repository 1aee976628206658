//! Search domain, observations and the discretised candidate set.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A box-constrained search domain `[lower, upper]` in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidArgument(
                "domain needs at least one dimension".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidArgument(format!(
                    "dimension {j}: need finite lower < upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The 1-D interval `[lower, upper]`.
    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }
}

/// One evaluated point: objective value `y` and feature vector `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
    pub g: Vec<f64>,
}

/// An expensive black box returning an objective value and feature vector.
pub trait Problem: Sync {
    fn domain(&self) -> &SearchDomain;

    /// Number of feature functions `m`.
    fn feature_dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<Observation>;
}

/// A [`Problem`] assembled from plain closures.
pub struct FnProblem<F, G> {
    domain: SearchDomain,
    feature_dim: usize,
    objective: F,
    features: G,
}

impl<F, G> FnProblem<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(domain: SearchDomain, feature_dim: usize, objective: F, features: G) -> Self {
        Self {
            domain,
            feature_dim,
            objective,
            features,
        }
    }
}

impl<F, G> Problem for FnProblem<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn domain(&self) -> &SearchDomain {
        &self.domain
    }

    fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<Observation> {
        if !self.domain.contains(x) {
            return Err(Error::InvalidArgument(format!(
                "{x:?} lies outside the search domain"
            )));
        }
        let g = (self.features)(x);
        if g.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: g.len(),
            });
        }
        Ok(Observation {
            x: x.to_vec(),
            y: (self.objective)(x),
            g,
        })
    }
}

/// Ordered collection of observations sharing input and feature dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, obs: Observation) -> Result<()> {
        if let Some(first) = self.observations.first() {
            if first.x.len() != obs.x.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.x.len(),
                    got: obs.x.len(),
                });
            }
            if first.g.len() != obs.g.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.g.len(),
                    got: obs.g.len(),
                });
            }
        }
        self.observations.push(obs);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.observations.iter().map(|o| o.x.clone()).collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.y).collect()
    }

    /// Values of feature `j` across observations.
    pub fn feature(&self, j: usize) -> Vec<f64> {
        self.observations.iter().map(|o| o.g[j]).collect()
    }
}

/// The finite set of points the solvers search over.
///
/// Points are stored in lexicographic grid order (the first dimension varies
/// slowest), which fixes the index used for argmax tie-breaking.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    points: Vec<Vec<f64>>,
}

impl CandidateSet {
    /// Wraps an explicit list of distinct points.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "candidate points must be distinct".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn get(&self, index: usize) -> &[f64] {
        &self.points[index]
    }
}

/// Equally spaced grid with `points_per_dim` points per dimension, endpoints included.
pub fn discretize(domain: &SearchDomain, points_per_dim: usize) -> Result<CandidateSet> {
    if points_per_dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "points_per_dim must be at least 2, got {points_per_dim}"
        )));
    }
    let axes: Vec<Vec<f64>> = domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(&l, &u)| {
            let step = (u - l) / (points_per_dim - 1) as f64;
            (0..points_per_dim)
                .map(|i| {
                    if i == points_per_dim - 1 {
                        u
                    } else {
                        l + step * i as f64
                    }
                })
                .collect()
        })
        .collect();

    let total = points_per_dim.pow(domain.dim() as u32);
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut p = vec![0.0; domain.dim()];
        for j in (0..domain.dim()).rev() {
            p[j] = axes[j][rem % points_per_dim];
            rem /= points_per_dim;
        }
        points.push(p);
    }
    Ok(CandidateSet { points })
}

/// Indices of `n0` distinct candidates drawn uniformly without replacement, ascending.
pub fn sample_initial_indices(
    candidates: &CandidateSet,
    n0: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if n0 == 0 || n0 > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {n0} initial points from {} candidates",
            candidates.len()
        )));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut picked = index::sample(&mut rng, candidates.len(), n0).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// The points selected by [`sample_initial_indices`].
pub fn sample_initial(candidates: &CandidateSet, n0: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(sample_initial_indices(candidates, n0, seed)?
        .into_iter()
        .map(|i| candidates.points[i].clone())
        .collect())
}

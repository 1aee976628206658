//! Random one-dimensional benchmark problems.
//!
//! Each problem has an objective and a single feature function on `[0, 10]`.
//! Both are the posterior means of GPs fitted to eleven anchors at
//! `x = 0, 1, …, 10` whose values are drawn uniformly from `[0, 20]`.
//!
//! Generator GPs use lengthscale 1 (the anchor spacing), signal variance equal
//! to the population variance of the anchor values, and a constant prior mean
//! equal to the anchor mean so that the functions do not sag towards zero
//! between anchors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Observation, Problem, SearchDomain};
use crate::error::{Error, Result};
use crate::gp::{GpModel, KernelHyperparams};
use crate::niche::NicheGrid;
use crate::rng;

pub const ANCHOR_COUNT: usize = 11;
pub const ANCHOR_RANGE: (f64, f64) = (0.0, 20.0);
pub const DOMAIN: (f64, f64) = (0.0, 10.0);
pub const GENERATOR_LENGTHSCALE: f64 = 1.0;
pub const GENERATOR_JITTER: f64 = 1e-6;

const OBJECTIVE_STREAM: u64 = 0;
const FEATURE_STREAM: u64 = 1;

/// Everything needed to rebuild one generated function without the RNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub anchor_x: Vec<f64>,
    pub anchor_y: Vec<f64>,
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub prior_mean: f64,
    pub jitter: f64,
}

impl GeneratorSpec {
    fn from_anchors(anchor_y: Vec<f64>) -> Self {
        let n = anchor_y.len() as f64;
        let mean = anchor_y.iter().sum::<f64>() / n;
        let variance = anchor_y
            .iter()
            .map(|y| (y - mean) * (y - mean))
            .sum::<f64>()
            / n;
        Self {
            anchor_x: (0..anchor_y.len()).map(|i| i as f64).collect(),
            anchor_y,
            lengthscale: GENERATOR_LENGTHSCALE,
            // All-equal anchors would give a zero-variance kernel.
            signal_variance: variance.max(1e-6),
            prior_mean: mean,
            jitter: GENERATOR_JITTER,
        }
    }
}

/// A deterministic function realised as a GP posterior mean.
#[derive(Debug, Clone)]
pub struct GeneratedFunction {
    spec: GeneratorSpec,
    model: GpModel,
}

impl GeneratedFunction {
    pub fn from_spec(spec: GeneratorSpec) -> Result<Self> {
        let model = GpModel::fit_with_prior_mean(
            spec.anchor_x.iter().map(|&x| vec![x]).collect(),
            spec.anchor_y.clone(),
            KernelHyperparams::isotropic(spec.lengthscale, spec.signal_variance),
            spec.jitter,
            spec.prior_mean,
        )?;
        Ok(Self { spec, model })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.model.predict_mean(x)
    }
}

/// One generated problem instance.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    seed: u64,
    domain: SearchDomain,
    objective: GeneratedFunction,
    feature: GeneratedFunction,
}

/// Serialisable problem file: provenance, both generator specs and the niche grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub seed: u64,
    pub lower: f64,
    pub upper: f64,
    pub objective: GeneratorSpec,
    pub feature: GeneratorSpec,
    pub grid: NicheGrid,
}

fn draw_anchors(seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, &[stream]);
    (0..ANCHOR_COUNT)
        .map(|_| rng.random_range(ANCHOR_RANGE.0..=ANCHOR_RANGE.1))
        .collect()
}

/// Draws the anchors of problem `seed` and fits both generator GPs.
pub fn generate_problem(seed: u64) -> Result<BenchmarkProblem> {
    Ok(BenchmarkProblem {
        seed,
        domain: SearchDomain::interval(DOMAIN.0, DOMAIN.1)?,
        objective: GeneratedFunction::from_spec(GeneratorSpec::from_anchors(draw_anchors(
            seed,
            OBJECTIVE_STREAM,
        )))?,
        feature: GeneratedFunction::from_spec(GeneratorSpec::from_anchors(draw_anchors(
            seed,
            FEATURE_STREAM,
        )))?,
    })
}

/// Five niches of equal width over the anchor range: boundaries 4, 8, 12, 16.
pub fn default_grid() -> NicheGrid {
    NicheGrid::new(vec![vec![4.0, 8.0, 12.0, 16.0]]).expect("static boundaries are valid")
}

impl BenchmarkProblem {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn objective(&self) -> &GeneratedFunction {
        &self.objective
    }

    pub fn feature(&self) -> &GeneratedFunction {
        &self.feature
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(Error::InvalidArgument(format!(
                "{x:?} lies outside [{}, {}]",
                self.domain.lower()[0],
                self.domain.upper()[0]
            )));
        }
        Ok(())
    }

    pub fn eval_objective(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.objective.value(x)
    }

    pub fn eval_feature(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(vec![self.feature.value(x)?])
    }

    pub fn to_spec(&self, grid: &NicheGrid) -> ProblemSpec {
        ProblemSpec {
            seed: self.seed,
            lower: self.domain.lower()[0],
            upper: self.domain.upper()[0],
            objective: self.objective.spec.clone(),
            feature: self.feature.spec.clone(),
            grid: grid.clone(),
        }
    }

    /// Rebuilds a problem (and its grid) from a problem file.
    pub fn from_spec(spec: &ProblemSpec) -> Result<(Self, NicheGrid)> {
        let problem = Self {
            seed: spec.seed,
            domain: SearchDomain::interval(spec.lower, spec.upper)?,
            objective: GeneratedFunction::from_spec(spec.objective.clone())?,
            feature: GeneratedFunction::from_spec(spec.feature.clone())?,
        };
        Ok((problem, spec.grid.clone()))
    }
}

impl Problem for BenchmarkProblem {
    fn domain(&self) -> &SearchDomain {
        &self.domain
    }

    fn feature_dim(&self) -> usize {
        1
    }

    fn evaluate(&self, x: &[f64]) -> Result<Observation> {
        Ok(Observation {
            x: x.to_vec(),
            y: self.eval_objective(x)?,
            g: self.eval_feature(x)?,
        })
    }
}

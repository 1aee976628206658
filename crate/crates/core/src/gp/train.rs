//! Maximum-likelihood training of RBF hyperparameters.
//!
//! Parameters are optimised in log space, `θ = (log ℓ₁, …, log ℓₚ, log σ²)`,
//! with the raw-space bounds mapped through `ln`. The jitter stays
//! proportional to σ² so the likelihood surface is smooth in `log σ²`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_training_data, dense, KernelHyperparams, MAX_RELATIVE_JITTER, TRAINING_RELATIVE_JITTER,
};
use crate::error::{Error, Result};
use crate::optim::{self, LbfgsOptions};
use crate::rng;

/// Raw-space box constraints on the kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal_variance: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            lengthscale: (0.001, 2.0),
            signal_variance: (1e-6, 1e4),
        }
    }
}

/// Pairwise squared differences, one flat `n × n` matrix per lengthscale.
struct Distances {
    y: Vec<f64>,
    per_scale: Vec<Vec<f64>>,
}

impl Distances {
    fn new(train_x: &[Vec<f64>], train_y: &[f64], n_scales: usize) -> Self {
        let n = train_x.len();
        let mut per_scale = vec![vec![0.0; n * n]; n_scales];
        for i in 0..n {
            for j in 0..i {
                for (k, (a, b)) in train_x[i].iter().zip(&train_x[j]).enumerate() {
                    let d = a - b;
                    let slot = if n_scales == 1 { 0 } else { k };
                    per_scale[slot][i * n + j] += d * d;
                }
                for m in per_scale.iter_mut() {
                    m[j * n + i] = m[i * n + j];
                }
            }
        }
        Self {
            y: train_y.to_vec(),
            per_scale,
        }
    }

    /// Log marginal likelihood and its gradient with respect to θ.
    fn evaluate(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = self.y.len();
        let p = self.per_scale.len();
        let variance = theta[p].exp();
        let inv_l2: Vec<f64> = theta[..p].iter().map(|t| (-2.0 * t).exp()).collect();

        // Lower triangle of the noiseless kernel matrix.
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let r2: f64 = (0..p)
                    .map(|s| self.per_scale[s][i * n + j] * inv_l2[s])
                    .sum();
                k[i * n + j] = variance * (-0.5 * r2).exp();
            }
            k[i * n + i] = variance;
        }

        let mut jitter = TRAINING_RELATIVE_JITTER * variance;
        let chol = loop {
            let mut l = k.clone();
            for i in 0..n {
                l[i * n + i] += jitter;
            }
            if dense::cholesky(&mut l, n) {
                break l;
            }
            jitter *= 10.0;
            if jitter > MAX_RELATIVE_JITTER * variance * (1.0 + 1e-9) {
                return None;
            }
        };
        let alpha = dense::cholesky_solve(&chol, n, &self.y);
        let quad: f64 = self.y.iter().zip(&alpha).map(|(a, b)| a * b).sum();
        let half_logdet: f64 = (0..n).map(|i| chol[i * n + i].ln()).sum();
        let lml = -0.5 * quad - half_logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        // ∂LML/∂θ = ½ tr((ααᵀ − K⁻¹) ∂K/∂θ). The jitter scales with σ², so
        // ∂K/∂log σ² = K and the trace term collapses to n.
        let mut grad = vec![0.0; p + 1];
        grad[p] = 0.5 * (quad - n as f64);
        if n > 1 {
            let k_inv = dense::cholesky_inverse(&chol, n);
            for i in 0..n {
                for j in 0..i {
                    let w = alpha[i] * alpha[j] - k_inv[i * n + j];
                    let wk = w * k[i * n + j];
                    for s in 0..p {
                        // Off-diagonal pairs appear twice in the trace; ½·2 = 1.
                        grad[s] += wk * self.per_scale[s][i * n + j] * inv_l2[s];
                    }
                }
            }
        }
        if !lml.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return None;
        }
        Some((lml, grad))
    }
}

fn to_theta(hp: &KernelHyperparams) -> Vec<f64> {
    hp.lengthscales
        .iter()
        .map(|l| l.ln())
        .chain(std::iter::once(hp.signal_variance.ln()))
        .collect()
}

fn from_theta(theta: &[f64], bounds: &HyperBounds) -> KernelHyperparams {
    let p = theta.len() - 1;
    KernelHyperparams {
        lengthscales: theta[..p]
            .iter()
            .map(|t| t.exp().clamp(bounds.lengthscale.0, bounds.lengthscale.1))
            .collect(),
        signal_variance: theta[p]
            .exp()
            .clamp(bounds.signal_variance.0, bounds.signal_variance.1),
    }
}

/// Log marginal likelihood of a zero-mean GP with relative jitter, and its
/// gradient with respect to `(log ℓ…, log σ²)`.
pub fn log_marginal_likelihood_and_gradient(
    train_x: &[Vec<f64>],
    train_y: &[f64],
    hp: &KernelHyperparams,
) -> Result<(f64, Vec<f64>)> {
    let dim = check_training_data(train_x, train_y)?;
    hp.validate(dim)?;
    Distances::new(train_x, train_y, hp.lengthscales.len())
        .evaluate(&to_theta(hp))
        .ok_or(Error::Factorisation {
            jitters: vec![MAX_RELATIVE_JITTER * hp.signal_variance],
        })
}

/// Maximises the log marginal likelihood from `init` and `restarts` random
/// starts drawn uniformly in the log-space box; returns the best optimum.
///
/// Ties in likelihood go to the earliest start, so the result does not
/// depend on how the parallel starts are scheduled.
pub fn train_hyperparams(
    train_x: &[Vec<f64>],
    train_y: &[f64],
    init: &KernelHyperparams,
    bounds: &HyperBounds,
    restarts: usize,
    seed: u64,
) -> Result<KernelHyperparams> {
    let dim = check_training_data(train_x, train_y)?;
    init.validate(dim)?;
    let p = init.lengthscales.len();
    let lower: Vec<f64> = std::iter::repeat_n(bounds.lengthscale.0.ln(), p)
        .chain(std::iter::once(bounds.signal_variance.0.ln()))
        .collect();
    let upper: Vec<f64> = std::iter::repeat_n(bounds.lengthscale.1.ln(), p)
        .chain(std::iter::once(bounds.signal_variance.1.ln()))
        .collect();

    let mut rng = rng::stream(seed, &[]);
    let mut starts = vec![to_theta(init)];
    for _ in 0..restarts {
        starts.push(
            lower
                .iter()
                .zip(&upper)
                .map(|(l, u)| rng.random_range(*l..=*u))
                .collect(),
        );
    }

    let data = Distances::new(train_x, train_y, p);
    let objective = |theta: &[f64]| {
        data.evaluate(theta)
            .map(|(v, g)| (-v, g.into_iter().map(|x| -x).collect()))
    };
    let opts = LbfgsOptions::default();
    let results: Vec<Option<optim::Minimum>> = starts
        .par_iter()
        .map(|x0| optim::minimize(objective, x0, &lower, &upper, &opts))
        .collect();

    let mut best: Option<&optim::Minimum> = None;
    for m in results.iter().flatten() {
        if best.is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    match best {
        Some(m) => Ok(from_theta(&m.x, bounds)),
        None => {
            log::warn!(
                "hyperparameter training failed from every start; keeping the initial values"
            );
            Ok(init.clone())
        }
    }
}

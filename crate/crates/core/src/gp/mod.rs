//! Noiseless Gaussian-process regression with an RBF kernel.
//!
//! The model interpolates its training data up to a small diagonal jitter
//! that exists only to keep the Cholesky factorisation well defined.

mod dense;
mod train;

pub use train::{log_marginal_likelihood_and_gradient, train_hyperparams, HyperBounds};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base jitter relative to the signal variance. The posterior sd at a
/// training point is about √jitter, which this keeps below 1e-3 for any
/// signal variance up to 1e4.
pub const BASE_RELATIVE_JITTER: f64 = 1e-10;
/// Starting relative jitter of the likelihood optimised in training. Larger
/// than the fitting jitter so the surface stays smooth where the kernel
/// matrix is nearly singular.
pub const TRAINING_RELATIVE_JITTER: f64 = 1e-8;
/// Largest relative jitter tried before giving up on a factorisation.
pub const MAX_RELATIVE_JITTER: f64 = 1e-2;

/// Posterior standard deviations below this are treated as exactly zero.
pub const SD_FLOOR: f64 = 1e-9;

/// RBF kernel parameters. A single lengthscale is shared by every input
/// dimension; otherwise there must be one per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
}

impl KernelHyperparams {
    pub fn isotropic(lengthscale: f64, signal_variance: f64) -> Self {
        Self {
            lengthscales: vec![lengthscale],
            signal_variance,
        }
    }

    /// Lengthscale applied to input dimension `j`.
    #[inline]
    pub fn lengthscale(&self, j: usize) -> f64 {
        if self.lengthscales.len() == 1 {
            self.lengthscales[0]
        } else {
            self.lengthscales[j]
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lengthscales.len() != 1 && self.lengthscales.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.lengthscales.len(),
            });
        }
        let ok = self.lengthscales.iter().all(|l| l.is_finite() && *l > 0.0)
            && self.signal_variance.is_finite()
            && self.signal_variance > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "kernel hyperparameters must be positive: {self:?}"
            )))
        }
    }
}

/// σ² · exp(−Σⱼ (x1ⱼ − x2ⱼ)² / (2ℓⱼ²)).
pub fn rbf_kernel(x1: &[f64], x2: &[f64], hp: &KernelHyperparams) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            expected: x1.len(),
            got: x2.len(),
        });
    }
    Ok(rbf(x1, x2, hp))
}

#[inline]
fn rbf(x1: &[f64], x2: &[f64], hp: &KernelHyperparams) -> f64 {
    let mut r2 = 0.0;
    for (j, (a, b)) in x1.iter().zip(x2).enumerate() {
        let l = hp.lengthscale(j);
        // (a-b)² and (b-a)² are bitwise equal, so the kernel is exactly symmetric.
        r2 += (a - b) * (a - b) / (l * l);
    }
    hp.signal_variance * (-0.5 * r2).exp()
}

/// Mean and standard deviation of a Gaussian posterior at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub sd: f64,
}

impl Posterior {
    pub fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }
}

/// A fitted GP: cached Cholesky factor of `K + jitter·I` and `alpha = (K + jitter·I)⁻¹(y − μ₀)`.
#[derive(Debug, Clone)]
pub struct GpModel {
    train_x: Vec<Vec<f64>>,
    train_y: Vec<f64>,
    hyperparams: KernelHyperparams,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    prior_mean: f64,
    jitter: f64,
}

pub(crate) fn check_training_data(train_x: &[Vec<f64>], train_y: &[f64]) -> Result<usize> {
    if train_x.is_empty() {
        return Err(Error::InvalidArgument(
            "GP needs at least one training point".into(),
        ));
    }
    if train_x.len() != train_y.len() {
        return Err(Error::DimensionMismatch {
            expected: train_x.len(),
            got: train_y.len(),
        });
    }
    let dim = train_x[0].len();
    if let Some(bad) = train_x.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    if train_y.iter().any(|y| !y.is_finite()) || train_x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GP training data".into()));
    }
    for i in 0..train_x.len() {
        for j in 0..i {
            if train_x[i] == train_x[j] {
                return Err(Error::InvalidArgument(format!(
                    "duplicate training input at rows {j} and {i}"
                )));
            }
        }
    }
    Ok(dim)
}

/// Factorises `base + jitter·I`, escalating jitter ×10 until it exceeds `cap`.
/// A zero starting jitter escalates to `floor` first.
pub(crate) fn factorise_with_jitter(
    base: &DMatrix<f64>,
    jitter: f64,
    floor: f64,
    cap: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut tried = Vec::new();
    let mut level = jitter;
    loop {
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += level;
        }
        tried.push(level);
        if let Some(chol) = k.cholesky() {
            if chol
                .l_dirty()
                .diagonal()
                .iter()
                .all(|d| d.is_finite() && *d > 0.0)
            {
                return Ok((chol, level));
            }
        }
        level = if level == 0.0 { floor } else { level * 10.0 };
        if level > cap * (1.0 + 1e-9) {
            return Err(Error::Factorisation { jitters: tried });
        }
    }
}

pub(crate) fn kernel_matrix(train_x: &[Vec<f64>], hp: &KernelHyperparams) -> DMatrix<f64> {
    let n = train_x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = hp.signal_variance;
        for j in 0..i {
            let v = rbf(&train_x[i], &train_x[j], hp);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

impl GpModel {
    /// Fits a zero-prior-mean GP.
    pub fn fit(
        train_x: Vec<Vec<f64>>,
        train_y: Vec<f64>,
        hp: KernelHyperparams,
        jitter: f64,
    ) -> Result<Self> {
        Self::fit_with_prior_mean(train_x, train_y, hp, jitter, 0.0)
    }

    /// Fits a GP whose prior mean is the constant `prior_mean`.
    pub fn fit_with_prior_mean(
        train_x: Vec<Vec<f64>>,
        train_y: Vec<f64>,
        hp: KernelHyperparams,
        jitter: f64,
        prior_mean: f64,
    ) -> Result<Self> {
        let dim = check_training_data(&train_x, &train_y)?;
        hp.validate(dim)?;
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "jitter must be non-negative, got {jitter}"
            )));
        }
        let k = kernel_matrix(&train_x, &hp);
        let cap = (MAX_RELATIVE_JITTER * hp.signal_variance).max(jitter);
        let (chol, jitter) =
            factorise_with_jitter(&k, jitter, BASE_RELATIVE_JITTER * hp.signal_variance, cap)?;
        let centred = DVector::from_iterator(train_y.len(), train_y.iter().map(|y| y - prior_mean));
        let alpha = chol.solve(&centred);
        Ok(Self {
            train_x,
            train_y,
            hyperparams: hp,
            chol,
            alpha,
            prior_mean,
            jitter,
        })
    }

    pub fn hyperparams(&self) -> &KernelHyperparams {
        &self.hyperparams
    }

    pub fn train_x(&self) -> &[Vec<f64>] {
        &self.train_x
    }

    pub fn train_y(&self) -> &[f64] {
        &self.train_y
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    /// Jitter actually added to the diagonal after any escalation.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular Cholesky factor.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn input_dim(&self) -> usize {
        self.train_x[0].len()
    }

    fn cross_kernel(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.train_x.len(),
            self.train_x.iter().map(|t| rbf(x, t, &self.hyperparams)),
        )
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Posterior mean `μ₀ + k*ᵀα`.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.prior_mean + self.cross_kernel(x).dot(&self.alpha))
    }

    /// Mean and variance before clamping the variance at zero.
    pub fn predict_unclamped(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        let ks = self.cross_kernel(x);
        let mean = self.prior_mean + ks.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor has a positive diagonal");
        let var = self.hyperparams.signal_variance - v.dot(&v);
        Ok((mean, var))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Posterior> {
        let (mean, var) = self.predict_unclamped(x)?;
        Ok(Posterior {
            mean,
            sd: var.max(0.0).sqrt(),
        })
    }

    /// −½ yᵀK⁻¹y − ½ log|K| − (n/2) log 2π, using the cached factor.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.train_y.len() as f64;
        let quad: f64 = self
            .train_y
            .iter()
            .zip(self.alpha.iter())
            .map(|(y, a)| (y - self.prior_mean) * a)
            .sum();
        let half_logdet: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * quad - half_logdet - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

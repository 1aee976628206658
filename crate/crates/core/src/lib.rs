//! Bayesian optimisation of elites.
//!
//! Quality-diversity search driven by Gaussian-process surrogates: the
//! objective and every feature function get their own GP, the feature space
//! is cut into niches, and each new evaluation is chosen to maximise the
//! expected joint improvement of the per-niche elites (EJIE).
//!
//! The crate also ships the two niche-by-niche baselines (sequential with
//! shared models, and fully independent models) and a generator of random
//! one-dimensional benchmark problems.

pub mod acquisition;
pub mod archive;
pub mod benchmark;
pub mod domain;
pub mod error;
pub mod gp;
pub mod niche;
pub mod normal;
pub mod optim;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};

//! Expected improvement per niche and the joint acquisition over all niches.
//!
//! For a candidate `x` with objective posterior `(f̄, s)` and feature
//! posteriors `(ḡᵢ, s′ᵢ)`, the joint score is
//!
//! ```text
//! EJIE(x) = Σ_c P(x ∈ c) · EI(f̄, s; f(ê_c))
//! ```
//!
//! where `f(ê_c)` is the elite value of niche `c` (or `f_min` if empty).

use rayon::prelude::*;

use crate::archive::EliteArchive;
use crate::domain::CandidateSet;
use crate::error::{Error, Result};
use crate::gp::{GpModel, Posterior, SD_FLOOR};
use crate::niche::NicheId;
use crate::normal;

/// Acquisition value of one candidate with its per-niche decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionScore {
    pub total: f64,
    pub per_niche: Vec<f64>,
}

impl AcquisitionScore {
    fn from_terms(per_niche: Vec<f64>) -> Self {
        Self {
            total: per_niche.iter().sum(),
            per_niche,
        }
    }
}

/// E[max(f − incumbent, 0)] for f ~ N(mean, sd²).
pub fn expected_improvement(post: &Posterior, incumbent: f64) -> f64 {
    let gap = post.mean - incumbent;
    if post.sd < SD_FLOOR {
        return gap.max(0.0);
    }
    let z = gap / post.sd;
    (gap * normal::cdf(z) + post.sd * normal::pdf(z)).max(0.0)
}

fn niche_terms(obj: &Posterior, probabilities: &[f64], archive: &EliteArchive) -> Vec<f64> {
    probabilities
        .iter()
        .enumerate()
        .map(|(c, &p)| {
            if p > 0.0 {
                p * expected_improvement(obj, archive.elite_value(c))
            } else {
                0.0
            }
        })
        .collect()
}

/// EI against the niche's elite, weighted by the probability of landing in that niche.
pub fn niche_weighted_ei(
    obj: &Posterior,
    features: &[Posterior],
    niche: &NicheId,
    archive: &EliteArchive,
) -> Result<f64> {
    let p = archive.grid().membership_probability(features, niche)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok(p * expected_improvement(obj, archive.elite_value(niche.index)))
}

/// Joint score from already-computed posteriors.
pub fn ejie_from_posteriors(
    obj: &Posterior,
    features: &[Posterior],
    archive: &EliteArchive,
) -> Result<AcquisitionScore> {
    let probs = archive.grid().all_membership_probabilities(features)?;
    Ok(AcquisitionScore::from_terms(niche_terms(
        obj, &probs, archive,
    )))
}

/// Posteriors of the objective model and every feature model at `x`.
pub fn posteriors(
    x: &[f64],
    obj_model: &GpModel,
    feat_models: &[GpModel],
) -> Result<(Posterior, Vec<Posterior>)> {
    let obj = obj_model.predict(x)?;
    let feats = feat_models
        .iter()
        .map(|m| m.predict(x))
        .collect::<Result<Vec<_>>>()?;
    Ok((obj, feats))
}

/// Expected joint improvement of elites at `x`.
pub fn ejie(
    x: &[f64],
    obj_model: &GpModel,
    feat_models: &[GpModel],
    archive: &EliteArchive,
) -> Result<AcquisitionScore> {
    let (obj, feats) = posteriors(x, obj_model, feat_models)?;
    ejie_from_posteriors(&obj, &feats, archive)
}

/// Weighted EI of a single active niche, laid out like an EJIE score
/// so sweeps from every solver share one shape.
pub fn single_niche_score(
    obj: &Posterior,
    features: &[Posterior],
    niche: &NicheId,
    archive: &EliteArchive,
) -> Result<AcquisitionScore> {
    let mut per_niche = vec![0.0; archive.grid().niche_count()];
    per_niche[niche.index] = niche_weighted_ei(obj, features, niche, archive)?;
    Ok(AcquisitionScore::from_terms(per_niche))
}

/// Scores every non-excluded candidate. Evaluation may run in parallel; the
/// output is in candidate order regardless.
pub fn score_candidates<F>(
    candidates: &CandidateSet,
    exclude: &[bool],
    scorer: F,
) -> Result<Vec<Option<AcquisitionScore>>>
where
    F: Fn(&[f64]) -> Result<AcquisitionScore> + Sync,
{
    if exclude.len() != candidates.len() {
        return Err(Error::DimensionMismatch {
            expected: candidates.len(),
            got: exclude.len(),
        });
    }
    candidates
        .points()
        .par_iter()
        .zip(exclude.par_iter())
        .map(|(x, &skip)| if skip { Ok(None) } else { scorer(x).map(Some) })
        .collect()
}

/// Index of the best score; ties and NaNs resolve to the lowest index.
pub fn argmax_scores(scores: &[Option<AcquisitionScore>]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        let Some(s) = s else { continue };
        let v = if s.total.is_nan() {
            f64::NEG_INFINITY
        } else {
            s.total
        };
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.ok_or(Error::CandidatesExhausted(scores.len()))
}

/// The non-excluded candidate maximising `scorer`, with its score.
pub fn argmax_acquisition<F>(
    candidates: &CandidateSet,
    exclude: &[bool],
    scorer: F,
) -> Result<(usize, f64)>
where
    F: Fn(&[f64]) -> Result<AcquisitionScore> + Sync,
{
    argmax_scores(&score_candidates(candidates, exclude, scorer)?)
}

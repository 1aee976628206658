//! Partition of feature space into niches and posterior niche membership.
//!
//! Each feature dimension `i` is cut by a strictly increasing list of
//! boundaries into `bᵢ` regions `(−∞, b₁), [b₁, b₂), …, [b_last, ∞)`; a value
//! equal to a boundary belongs to the region above it. Niches are the
//! Cartesian product of regions, indexed in row-major (mixed-radix) order
//! with the first feature dimension most significant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{Posterior, SD_FLOOR};
use crate::normal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct NicheGrid {
    boundaries: Vec<Vec<f64>>,
    labels: Option<Vec<Vec<String>>>,
    region_counts: Vec<usize>,
    niche_count: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    boundaries: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<Vec<String>>>,
}

impl TryFrom<GridSpec> for NicheGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        let grid = NicheGrid::new(spec.boundaries)?;
        match spec.labels {
            Some(labels) => grid.with_labels(labels),
            None => Ok(grid),
        }
    }
}

impl From<NicheGrid> for GridSpec {
    fn from(grid: NicheGrid) -> Self {
        GridSpec {
            boundaries: grid.boundaries,
            labels: grid.labels,
        }
    }
}

/// Identity of one niche: flat index plus per-dimension region indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NicheId {
    pub index: usize,
    pub regions: Vec<usize>,
}

impl NicheGrid {
    /// Builds a grid from per-dimension boundary lists. An empty list gives a
    /// dimension with a single region covering the whole real line.
    pub fn new(boundaries: Vec<Vec<f64>>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::InvalidArgument(
                "niche grid needs at least one feature dimension".into(),
            ));
        }
        for (i, b) in boundaries.iter().enumerate() {
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "boundary in feature dimension {i}"
                )));
            }
            if b.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "boundaries of feature dimension {i} must be strictly increasing: {b:?}"
                )));
            }
        }
        let region_counts: Vec<usize> = boundaries.iter().map(|b| b.len() + 1).collect();
        let niche_count = region_counts.iter().product();
        Ok(Self {
            boundaries,
            labels: None,
            region_counts,
            niche_count,
        })
    }

    /// Attaches a human-readable label to every region of every dimension.
    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != self.dims()
            || labels
                .iter()
                .zip(&self.region_counts)
                .any(|(l, &c)| l.len() != c)
        {
            return Err(Error::InvalidArgument(
                "need exactly one label per region".into(),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Number of feature dimensions `m`.
    pub fn dims(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[Vec<f64>] {
        &self.boundaries
    }

    pub fn region_counts(&self) -> &[usize] {
        &self.region_counts
    }

    /// Total number of niches `C = ∏ bᵢ`.
    pub fn niche_count(&self) -> usize {
        self.niche_count
    }

    pub fn encode(&self, regions: &[usize]) -> usize {
        regions
            .iter()
            .zip(&self.region_counts)
            .fold(0, |acc, (&r, &count)| acc * count + r)
    }

    /// The niche with flat index `index`.
    pub fn niche(&self, index: usize) -> NicheId {
        assert!(index < self.niche_count, "niche index {index} out of range");
        let mut rem = index;
        let mut regions = vec![0; self.dims()];
        for i in (0..self.dims()).rev() {
            regions[i] = rem % self.region_counts[i];
            rem /= self.region_counts[i];
        }
        NicheId { index, regions }
    }

    pub fn niches(&self) -> impl Iterator<Item = NicheId> + '_ {
        (0..self.niche_count).map(|i| self.niche(i))
    }

    /// Label of a niche, e.g. "Slow and Strong", if labels were attached.
    pub fn label(&self, niche: &NicheId) -> Option<String> {
        let labels = self.labels.as_ref()?;
        Some(
            niche
                .regions
                .iter()
                .zip(labels)
                .map(|(&r, l)| l[r].as_str())
                .collect::<Vec<_>>()
                .join(" and "),
        )
    }

    fn region_of(&self, dim: usize, value: f64) -> usize {
        // Boundaries are sorted, so this counts the boundaries ≤ value.
        self.boundaries[dim].partition_point(|b| *b <= value)
    }

    /// The niche a feature vector falls in.
    pub fn classify(&self, g: &[f64]) -> Result<NicheId> {
        if g.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature vector {g:?}")));
        }
        let regions: Vec<usize> = g
            .iter()
            .enumerate()
            .map(|(i, &v)| self.region_of(i, v))
            .collect();
        Ok(NicheId {
            index: self.encode(&regions),
            regions,
        })
    }

    /// Posterior probability of each region of feature dimension `dim`.
    pub fn region_probabilities(&self, dim: usize, post: &Posterior) -> Vec<f64> {
        let b = &self.boundaries[dim];
        let mut probs = vec![0.0; b.len() + 1];
        if post.sd < SD_FLOOR {
            probs[self.region_of(dim, post.mean)] = 1.0;
            return probs;
        }
        for (r, p) in probs.iter_mut().enumerate() {
            let lo = if r == 0 {
                f64::NEG_INFINITY
            } else {
                (b[r - 1] - post.mean) / post.sd
            };
            let hi = if r == b.len() {
                f64::INFINITY
            } else {
                (b[r] - post.mean) / post.sd
            };
            *p = normal::interval(lo, hi);
        }
        probs
    }

    fn check_posteriors(&self, posts: &[Posterior]) -> Result<()> {
        if posts.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: posts.len(),
            });
        }
        Ok(())
    }

    /// P(x ∈ niche) given one independent feature posterior per dimension.
    pub fn membership_probability(&self, posts: &[Posterior], niche: &NicheId) -> Result<f64> {
        self.check_posteriors(posts)?;
        Ok(posts
            .iter()
            .enumerate()
            .map(|(i, p)| self.region_probabilities(i, p)[niche.regions[i]])
            .product())
    }

    /// Membership probabilities of every niche, in niche-index order.
    pub fn all_membership_probabilities(&self, posts: &[Posterior]) -> Result<Vec<f64>> {
        self.check_posteriors(posts)?;
        let mut out = vec![1.0];
        for (i, p) in posts.iter().enumerate() {
            let probs = self.region_probabilities(i, p);
            out = out
                .iter()
                .flat_map(|a| probs.iter().map(move |b| a * b))
                .collect();
        }
        Ok(out)
    }
}

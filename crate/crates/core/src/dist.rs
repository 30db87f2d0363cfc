//! Exact finite probability distributions.
//!
//! Domains are indexed `0..size-1`; multi-coordinate domains flatten
//! row-major with the last coordinate fastest. That ordering is the
//! bit-exact contract shared with every file format in the workspace.
//!
//! All values are immutable after construction and may be shared freely
//! across threads. Operations never renormalize silently; use
//! [`FiniteDist::from_weights`] when renormalization is wanted.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for normalization checks.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("distribution over an empty domain")]
    EmptyDomain,
    #[error("negative probability {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1 within {PROB_TOLERANCE}")]
    NotNormalized { sum: f64 },
    #[error("total weight {sum} is not positive")]
    ZeroTotalWeight { sum: f64 },
    #[error("domain size mismatch: {left} vs {right}")]
    DomainMismatch { left: usize, right: usize },
    #[error("index {index} out of range for domain of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("joint of size {len} does not split into {x_count} rows")]
    BadSplit { len: usize, x_count: usize },
    #[error("coordinate {coordinate} has zero marginal probability")]
    ZeroMarginal { coordinate: usize },
    #[error("shape {shape:?} does not describe a domain of size {len}")]
    ShapeMismatch { shape: Vec<usize>, len: usize },
    #[error("mixture needs at least one component")]
    EmptyMixture,
    #[error("mixture components disagree on per-coordinate domain sizes")]
    MixedShapes,
}

/// A probability vector over a finite indexed domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl FiniteDist {
    /// Wraps a probability vector, validating non-negativity and
    /// normalization to within [`PROB_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self, DistError> {
        if probs.is_empty() {
            return Err(DistError::EmptyDomain);
        }
        for (index, &value) in probs.iter().enumerate() {
            if value < 0.0 || value.is_nan() {
                return Err(DistError::NegativeEntry { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(DistError::NotNormalized { sum });
        }
        Ok(FiniteDist { probs })
    }

    /// Normalizes non-negative weights into a distribution. This is the
    /// one place renormalization happens.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, DistError> {
        if weights.is_empty() {
            return Err(DistError::EmptyDomain);
        }
        for (index, &value) in weights.iter().enumerate() {
            if value < 0.0 || value.is_nan() {
                return Err(DistError::NegativeEntry { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || sum.is_nan() {
            return Err(DistError::ZeroTotalWeight { sum });
        }
        Ok(FiniteDist {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "uniform distribution over an empty domain");
        FiniteDist {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn point_mass(index: usize, size: usize) -> Result<Self, DistError> {
        if index >= size {
            return Err(DistError::IndexOutOfRange { index, size });
        }
        let mut probs = vec![0.0; size];
        probs[index] = 1.0;
        Ok(FiniteDist { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Draws one element by inverse-CDF walk; advances the generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding can leave acc slightly below 1; fall back to the last
        // element with positive mass.
        self.probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probs.len() - 1)
    }

    /// Total variation distance `(1/2)·Σ|p(x) − q(x)|`.
    pub fn tv_distance(&self, other: &FiniteDist) -> Result<f64, DistError> {
        if self.len() != other.len() {
            return Err(DistError::DomainMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let sum: f64 = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .sum();
        Ok(0.5 * sum)
    }
}

/// The two coordinates of a joint distribution over `X × Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

fn split_counts(joint: &FiniteDist, x_count: usize) -> Result<usize, DistError> {
    if x_count == 0 || !joint.len().is_multiple_of(x_count) {
        return Err(DistError::BadSplit {
            len: joint.len(),
            x_count,
        });
    }
    Ok(joint.len() / x_count)
}

/// Conditions a joint over `X × Y` (row-major, `Y` fastest) on `X = x`,
/// returning the distribution of `Y`.
pub fn condition(joint: &FiniteDist, x_count: usize, x: usize) -> Result<FiniteDist, DistError> {
    let y_count = split_counts(joint, x_count)?;
    if x >= x_count {
        return Err(DistError::IndexOutOfRange {
            index: x,
            size: x_count,
        });
    }
    let row = &joint.probs()[x * y_count..(x + 1) * y_count];
    let mass: f64 = row.iter().sum();
    if mass <= 0.0 {
        return Err(DistError::ZeroMarginal { coordinate: x });
    }
    FiniteDist::from_weights(row.to_vec())
}

/// Marginal of a joint over `X × Y` on the given axis.
pub fn marginal(joint: &FiniteDist, x_count: usize, axis: Axis) -> Result<FiniteDist, DistError> {
    let y_count = split_counts(joint, x_count)?;
    let outer = match axis {
        Axis::X => x_count,
        Axis::Y => y_count,
    };
    let mut out = vec![0.0; outer];
    for x in 0..x_count {
        for y in 0..y_count {
            let idx = match axis {
                Axis::X => x,
                Axis::Y => y,
            };
            out[idx] += joint.prob(x * y_count + y);
        }
    }
    FiniteDist::new(out)
}

/// Flattens multi-coordinate indices row-major, last coordinate fastest.
pub fn flat_index(shape: &[usize], coords: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), coords.len());
    let mut idx = 0;
    for (&size, &c) in shape.iter().zip(coords) {
        debug_assert!(c < size);
        idx = idx * size + c;
    }
    idx
}

/// Inverse of [`flat_index`]; writes coordinates into `out`.
pub fn coords_of_into(shape: &[usize], mut flat: usize, out: &mut [usize]) {
    debug_assert_eq!(shape.len(), out.len());
    for i in (0..shape.len()).rev() {
        out[i] = flat % shape[i];
        flat /= shape[i];
    }
    debug_assert_eq!(flat, 0);
}

/// Total number of points in a product domain.
pub fn domain_size(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// An independent product of per-coordinate distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDist {
    factors: Vec<FiniteDist>,
}

impl ProductDist {
    pub fn new(factors: Vec<FiniteDist>) -> Result<Self, DistError> {
        if factors.is_empty() {
            return Err(DistError::EmptyDomain);
        }
        Ok(ProductDist { factors })
    }

    pub fn factors(&self) -> &[FiniteDist] {
        &self.factors
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(FiniteDist::len).collect()
    }

    pub fn joint_prob(&self, coords: &[usize]) -> f64 {
        debug_assert_eq!(coords.len(), self.factors.len());
        self.factors
            .iter()
            .zip(coords)
            .map(|(f, &c)| f.prob(c))
            .product()
    }

    /// Expands to an explicit joint over the flattened product domain.
    pub fn to_joint(&self) -> Result<FiniteDist, DistError> {
        let shape = self.shape();
        let total = domain_size(&shape);
        let mut probs = vec![0.0; total];
        let mut coords = vec![0usize; shape.len()];
        for (flat, slot) in probs.iter_mut().enumerate() {
            coords_of_into(&shape, flat, &mut coords);
            *slot = self.joint_prob(&coords);
        }
        FiniteDist::from_weights(probs)
    }
}

/// A uniform mixture of product distributions over a common domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureOfProducts {
    components: Vec<ProductDist>,
}

impl MixtureOfProducts {
    pub fn new(components: Vec<ProductDist>) -> Result<Self, DistError> {
        let first = components.first().ok_or(DistError::EmptyMixture)?;
        let shape = first.shape();
        if components.iter().any(|c| c.shape() != shape) {
            return Err(DistError::MixedShapes);
        }
        Ok(MixtureOfProducts { components })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ProductDist] {
        &self.components
    }

    pub fn shape(&self) -> Vec<usize> {
        self.components[0].shape()
    }

    pub fn joint_prob(&self, coords: &[usize]) -> f64 {
        let t = self.components.len() as f64;
        self.components
            .iter()
            .map(|c| c.joint_prob(coords))
            .sum::<f64>()
            / t
    }

    pub fn to_joint(&self) -> Result<FiniteDist, DistError> {
        let shape = self.shape();
        let total = domain_size(&shape);
        let mut probs = vec![0.0; total];
        let mut coords = vec![0usize; shape.len()];
        for (flat, slot) in probs.iter_mut().enumerate() {
            coords_of_into(&shape, flat, &mut coords);
            *slot = self.joint_prob(&coords);
        }
        FiniteDist::from_weights(probs)
    }
}

/// Replaces a joint distribution over a product domain by the product of
/// its per-coordinate marginals.
pub fn behaviorize(mixed: &FiniteDist, shape: &[usize]) -> Result<ProductDist, DistError> {
    if shape.is_empty() || domain_size(shape) != mixed.len() {
        return Err(DistError::ShapeMismatch {
            shape: shape.to_vec(),
            len: mixed.len(),
        });
    }
    let mut marginals: Vec<Vec<f64>> = shape.iter().map(|&s| vec![0.0; s]).collect();
    let mut coords = vec![0usize; shape.len()];
    for flat in 0..mixed.len() {
        coords_of_into(shape, flat, &mut coords);
        let p = mixed.prob(flat);
        for (axis, &c) in coords.iter().enumerate() {
            marginals[axis][c] += p;
        }
    }
    let factors = marginals
        .into_iter()
        .map(FiniteDist::from_weights)
        .collect::<Result<Vec<_>, _>>()?;
    ProductDist::new(factors)
}

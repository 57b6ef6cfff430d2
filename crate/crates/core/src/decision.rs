//! The decision distribution: how likely each option is to be the optimum under the
//! current particle posterior, and its entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ScoringMatrix;
use crate::elicitation::ParticleSet;

/// Probability that each option is utility-optimal, with its entropy in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionDistribution {
    probs: Vec<f64>,
    entropy: f64,
}

impl DecisionDistribution {
    /// Wraps a probability vector, computing its entropy.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let entropy = entropy(&probs)?;
        Ok(Self { probs, entropy })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// `max_i χ_i`, the quantity compared against the stopping threshold.
    pub fn confidence(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    /// Most probable option (lowest index on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::InvalidProbabilities("empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidProbabilities(format!(
            "entry {p} is negative or not finite"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidProbabilities(format!("sums to {sum}")));
    }
    Ok(entropy_unchecked(probs))
}

pub(crate) fn entropy_unchecked(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

/// Accumulates per-particle mass into per-option buckets and normalizes by the
/// bucket total. A posterior concentrated on one option comes out as exactly 1.0.
pub(crate) fn bucket_distribution(
    options: usize,
    best: &[usize],
    mass: impl Iterator<Item = f64>,
) -> Vec<f64> {
    let mut buckets = vec![0.0; options];
    for (&b, m) in best.iter().zip(mass) {
        buckets[b] += m;
    }
    let total: f64 = buckets.iter().sum();
    for b in &mut buckets {
        *b /= total;
    }
    buckets
}

/// Best option for every particle in the set.
pub(crate) fn particle_best_options(particles: &ParticleSet, matrix: &ScoringMatrix) -> Vec<usize> {
    particles
        .vectors()
        .iter()
        .map(|w| matrix.argmax_for(w.as_slice()))
        .collect()
}

/// `χ_i = Σ_p π_p · 1[argmax (S w_p) = i]`.
pub fn decision_distribution(
    particles: &ParticleSet,
    matrix: &ScoringMatrix,
) -> Result<DecisionDistribution> {
    if particles.dimension() != matrix.factors() {
        return Err(Error::DimensionMismatch {
            expected: matrix.factors(),
            actual: particles.dimension(),
        });
    }
    let best = particle_best_options(particles, matrix);
    let probs = bucket_distribution(matrix.options(), &best, particles.weights().iter().copied());
    let entropy = entropy_unchecked(&probs);
    Ok(DecisionDistribution { probs, entropy })
}

use super::particles::ParticleSet;
use super::{check_kappa, sigmoid, Question};
use crate::decision::{bucket_distribution, entropy_unchecked, particle_best_options};
use crate::error::{Error, Result};
use crate::matrix::ScoringMatrix;

/// The decision distribution now and after each hypothetical binary answer.
#[derive(Debug, Clone, PartialEq)]
pub struct HypotheticalOutcomes {
    pub prob_prefer_a: f64,
    pub prob_prefer_b: f64,
    pub current: Vec<f64>,
    pub after_prefer_a: Vec<f64>,
    pub after_prefer_b: Vec<f64>,
}

impl HypotheticalOutcomes {
    /// `H(χ) − [p_A H(χ^A) + p_B H(χ^B)]`.
    pub fn information_gain(&self) -> f64 {
        entropy_unchecked(&self.current)
            - (self.prob_prefer_a * entropy_unchecked(&self.after_prefer_a)
                + self.prob_prefer_b * entropy_unchecked(&self.after_prefer_b))
    }
}

/// Simulates both binary answers to `question` without touching `particles`.
pub fn hypothetical_outcomes(
    particles: &ParticleSet,
    matrix: &ScoringMatrix,
    question: Question,
    kappa: f64,
) -> Result<HypotheticalOutcomes> {
    check_inputs(particles, matrix, question, kappa)?;
    let best = particle_best_options(particles, matrix);
    Ok(outcomes_with_best(particles, &best, matrix.options(), question, kappa))
}

/// Expected reduction in decision entropy from asking `question`.
///
/// The expectation weights each answer by its posterior-predictive probability.
pub fn expected_information_gain(
    particles: &ParticleSet,
    matrix: &ScoringMatrix,
    question: Question,
    kappa: f64,
) -> Result<f64> {
    Ok(hypothetical_outcomes(particles, matrix, question, kappa)?.information_gain())
}

fn check_inputs(
    particles: &ParticleSet,
    matrix: &ScoringMatrix,
    question: Question,
    kappa: f64,
) -> Result<()> {
    if particles.dimension() != matrix.factors() {
        return Err(Error::DimensionMismatch {
            expected: matrix.factors(),
            actual: particles.dimension(),
        });
    }
    question.check(matrix.factors())?;
    check_kappa(kappa)
}

/// Core of the EIG computation given each particle's best option.
pub(crate) fn outcomes_with_best(
    particles: &ParticleSet,
    best: &[usize],
    options: usize,
    question: Question,
    kappa: f64,
) -> HypotheticalOutcomes {
    let (a, b) = (question.factor_a(), question.factor_b());
    let weights = particles.weights();
    let diffs: Vec<f64> = particles
        .vectors()
        .iter()
        .map(|v| kappa * (v.weight(a) - v.weight(b)))
        .collect();

    let current = bucket_distribution(options, best, weights.iter().copied());
    let mass_a = weights.iter().zip(&diffs).map(|(pi, &d)| pi * sigmoid(d));
    let after_prefer_a = bucket_distribution(options, best, mass_a);
    let mass_b = weights.iter().zip(&diffs).map(|(pi, &d)| pi * sigmoid(-d));
    let after_prefer_b = bucket_distribution(options, best, mass_b);

    let prob_prefer_a: f64 = weights.iter().zip(&diffs).map(|(pi, &d)| pi * sigmoid(d)).sum();
    HypotheticalOutcomes {
        prob_prefer_a,
        prob_prefer_b: 1.0 - prob_prefer_a,
        current,
        after_prefer_a,
        after_prefer_b,
    }
}

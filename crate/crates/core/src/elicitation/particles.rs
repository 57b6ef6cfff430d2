use rand::Rng;
use serde::Serialize;

use super::{check_kappa, likelihood, sigmoid, Question, Response};
use crate::error::{Error, Result};
use crate::prefs::{sample_simplex, PreferenceVector};

/// Total posterior mass below which an update is treated as degenerate.
const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Weighted personas approximating the posterior over preference vectors.
///
/// Updates only reweight; the persona vectors never change and no weight is ever
/// driven to exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleSet {
    vectors: Vec<PreferenceVector>,
    weights: Vec<f64>,
}

impl ParticleSet {
    pub fn new(vectors: Vec<PreferenceVector>, weights: Vec<f64>) -> Result<Self> {
        let dim = vectors.first().ok_or(Error::EmptyParticles)?.len();
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        if weights.len() != vectors.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} particles",
                weights.len(),
                vectors.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights("negative or non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        Ok(Self { vectors, weights })
    }

    /// Equal weights `1/P`.
    pub fn uniform(vectors: Vec<PreferenceVector>) -> Result<Self> {
        let p = vectors.len();
        Self::new(vectors, vec![1.0 / p as f64; p])
    }

    /// `count` personas drawn from the uniform Dirichlet prior over `factors`.
    pub fn sample_prior<R: Rng + ?Sized>(count: usize, factors: usize, rng: &mut R) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyParticles);
        }
        let vectors = (0..count)
            .map(|_| sample_simplex(factors, 1.0, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(vectors)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Number of factors each persona weighs.
    pub fn dimension(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[PreferenceVector] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Posterior mean preference vector `Σ_p π_p w_p`.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dimension()];
        for (v, &pi) in self.vectors.iter().zip(&self.weights) {
            for (m, w) in mean.iter_mut().zip(v.as_slice()) {
                *m += pi * w;
            }
        }
        mean
    }

    /// Multiplies each weight by the likelihood of `response` and renormalizes.
    pub fn update(&mut self, question: Question, response: Response, kappa: f64) -> Result<()> {
        question.check(self.dimension())?;
        check_kappa(kappa)?;
        let scaled: Vec<f64> = self
            .vectors
            .iter()
            .zip(&self.weights)
            .map(|(v, &pi)| pi * likelihood(v.as_slice(), question, response, kappa))
            .collect();
        self.weights = normalize(scaled)?;
        Ok(())
    }

    /// Non-mutating form of [`ParticleSet::update`].
    pub fn updated(&self, question: Question, response: Response, kappa: f64) -> Result<Self> {
        let mut next = self.clone();
        next.update(question, response, kappa)?;
        Ok(next)
    }

    /// `σ(κ (w_a − w_b))` for each persona.
    pub(crate) fn prefer_a_likelihoods(&self, question: Question, kappa: f64) -> Vec<f64> {
        let (a, b) = (question.factor_a(), question.factor_b());
        self.vectors
            .iter()
            .map(|v| sigmoid(kappa * (v.weight(a) - v.weight(b))))
            .collect()
    }
}

fn normalize(mut scaled: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = scaled.iter().sum();
    if !(total.is_finite() && total > UNDERFLOW_FLOOR) {
        return Err(Error::NumericDegeneracy);
    }
    for w in &mut scaled {
        *w /= total;
        // Down-weighted, never eliminated.
        if *w == 0.0 {
            *w = f64::MIN_POSITIVE;
        }
    }
    Ok(scaled)
}

/// Posterior-predictive probabilities of the two binary answers to `question`.
pub fn predictive_response_probs(
    particles: &ParticleSet,
    question: Question,
    kappa: f64,
) -> Result<(f64, f64)> {
    question.check(particles.dimension())?;
    check_kappa(kappa)?;
    let lik = particles.prefer_a_likelihoods(question, kappa);
    let p_a: f64 = particles.weights().iter().zip(&lik).map(|(pi, l)| pi * l).sum();
    Ok((p_a, 1.0 - p_a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pv(w: &[f64]) -> PreferenceVector {
        PreferenceVector::new(w.to_vec()).unwrap()
    }

    fn q01() -> Question {
        Question::new(0, 1).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert_eq!(ParticleSet::uniform(vec![]).unwrap_err(), Error::EmptyParticles);
        assert!(ParticleSet::uniform(vec![pv(&[1.0]), pv(&[0.5, 0.5])]).is_err());
        assert!(ParticleSet::new(vec![pv(&[1.0])], vec![0.5]).is_err());
        assert!(ParticleSet::new(vec![pv(&[1.0]), pv(&[1.0])], vec![1.5, -0.5]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(ParticleSet::sample_prior(0, 3, &mut rng).is_err());
        let ps = ParticleSet::sample_prior(50, 4, &mut rng).unwrap();
        assert_eq!(ps.len(), 50);
        assert_eq!(ps.dimension(), 4);
    }

    #[test]
    fn two_persona_update_by_hand() {
        let mut ps = ParticleSet::uniform(vec![pv(&[0.8, 0.2]), pv(&[0.2, 0.8])]).unwrap();
        ps.update(q01(), Response::PreferA, 10.0).unwrap();
        // σ(6) / (σ(6) + σ(-6)) = σ(6) since the pair sums to one.
        assert!((ps.weights()[0] - 0.997527).abs() < 1e-6);
        assert!((ps.weights()[1] - 0.002473).abs() < 1e-6);
        assert!((ps.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn neutral_on_tied_personas_is_identity() {
        let ps = ParticleSet::new(
            vec![pv(&[0.4, 0.4, 0.2]), pv(&[0.1, 0.1, 0.8]), pv(&[0.5, 0.5, 0.0])],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let after = ps.updated(q01(), Response::Neutral, 10.0).unwrap();
        for (a, b) in after.weights().iter().zip(ps.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(after.vectors(), ps.vectors());
    }

    #[test]
    fn huge_kappa_keeps_weights_positive() {
        let mut ps = ParticleSet::uniform(vec![pv(&[0.9, 0.1]), pv(&[0.1, 0.9])]).unwrap();
        for _ in 0..10 {
            ps.update(q01(), Response::PreferA, 5_000.0).unwrap();
        }
        assert!(ps.weights().iter().all(|&w| w > 0.0));
        assert!((ps.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn predictive_probs() {
        let single = ParticleSet::uniform(vec![pv(&[0.8, 0.2])]).unwrap();
        let (a, b) = predictive_response_probs(&single, q01(), 10.0).unwrap();
        assert!((a - 0.997527).abs() < 1e-6);
        assert!((b - 0.002473).abs() < 1e-6);
        assert_eq!(a + b, 1.0);

        let symmetric = ParticleSet::uniform(vec![pv(&[0.7, 0.3]), pv(&[0.3, 0.7])]).unwrap();
        let (a, b) = predictive_response_probs(&symmetric, q01(), 10.0).unwrap();
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn index_errors() {
        let ps = ParticleSet::uniform(vec![pv(&[0.8, 0.2])]).unwrap();
        let q = Question::new(0, 5).unwrap();
        assert!(predictive_response_probs(&ps, q, 1.0).is_err());
        assert!(ps.updated(q, Response::PreferA, 1.0).is_err());
    }
}

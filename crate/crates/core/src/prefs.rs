//! Preference vectors on the probability simplex and Dirichlet sampling.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, OpenClosed01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ w = 1` accepted by [`PreferenceVector::new`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Non-negative factor weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPreferences("no factors".into()));
        }
        if let Some((j, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidPreferences(format!(
                "weight {j} = {w} is negative or not finite"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidPreferences(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    /// The simplex center `(1/K, ..., 1/K)`.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPreferences("no factors".into()));
        }
        Ok(Self(vec![1.0 / k as f64; k]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn weight(&self, factor: usize) -> f64 {
        self.0[factor]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(p: PreferenceVector) -> Self {
        p.0
    }
}

/// Draws from a symmetric Dirichlet(alpha, ..., alpha) over `k` factors.
///
/// `alpha = 1` (the uniform prior) normalizes `k` unit-rate exponentials. Other
/// concentrations normalize Gamma(alpha, 1) draws; below one the draws are taken
/// in log space as `ln G(alpha + 1) + ln(U) / alpha` so tiny values never all
/// round to zero.
pub fn sample_simplex<R: Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> Result<PreferenceVector> {
    if k == 0 {
        return Err(Error::InvalidPreferences("cannot sample zero factors".into()));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "Dirichlet concentration must be positive, got {alpha}"
        )));
    }
    if k == 1 {
        return Ok(PreferenceVector(vec![1.0]));
    }

    let raw: Vec<f64> = if alpha == 1.0 {
        (0..k).map(|_| Exp1.sample(rng)).collect()
    } else if alpha >= 1.0 {
        let gamma = Gamma::new(alpha, 1.0).expect("alpha checked above");
        (0..k).map(|_| gamma.sample(rng)).collect()
    } else {
        let gamma = Gamma::new(alpha + 1.0, 1.0).expect("alpha checked above");
        let logs: Vec<f64> = (0..k)
            .map(|_| {
                let g: f64 = gamma.sample(rng);
                let u: f64 = OpenClosed01.sample(rng);
                g.ln() + u.ln() / alpha
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logs.into_iter().map(|l| (l - max).exp()).collect()
    };

    let sum: f64 = raw.iter().sum();
    Ok(PreferenceVector(raw.into_iter().map(|x| x / sum).collect()))
}

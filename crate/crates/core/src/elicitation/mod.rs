//! Interactive preference elicitation: particle posterior, response likelihoods,
//! decision-aware question selection, stopping and recommendation.

mod eig;
mod particles;
mod session;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefs::PreferenceVector;

pub use eig::{expected_information_gain, hypothetical_outcomes, HypotheticalOutcomes};
pub use particles::{predictive_response_probs, ParticleSet};
pub use session::{
    recommend, run_session, select_question, should_stop, ElicitationConfig, Exchange, DEFAULT_KAPPA, DEFAULT_QUESTION_CAP,
    Recommendation, SessionAborted, SessionResult, SessionState, SessionStatus, StopCheck,
    StopReason,
};

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A pairwise tradeoff question "does factor `a` or factor `b` matter more?".
///
/// Always stored with `factor_a < factor_b`; responses are read relative to
/// that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawQuestion", into = "RawQuestion")]
pub struct Question {
    factor_a: usize,
    factor_b: usize,
}

#[derive(Serialize, Deserialize)]
struct RawQuestion {
    factor_a: usize,
    factor_b: usize,
}

impl TryFrom<RawQuestion> for Question {
    type Error = Error;

    fn try_from(raw: RawQuestion) -> Result<Self> {
        Question::new(raw.factor_a, raw.factor_b)
    }
}

impl From<Question> for RawQuestion {
    fn from(q: Question) -> Self {
        RawQuestion {
            factor_a: q.factor_a,
            factor_b: q.factor_b,
        }
    }
}

impl Question {
    pub fn new(factor_a: usize, factor_b: usize) -> Result<Self> {
        if factor_a >= factor_b {
            return Err(Error::InvalidQuestion(factor_a, factor_b));
        }
        Ok(Self { factor_a, factor_b })
    }

    pub fn factor_a(self) -> usize {
        self.factor_a
    }

    pub fn factor_b(self) -> usize {
        self.factor_b
    }

    /// Every canonical pair over `k` factors, in lexicographic order.
    pub fn all_pairs(k: usize) -> impl Iterator<Item = Question> {
        (0..k).flat_map(move |a| (a + 1..k).map(move |b| Question { factor_a: a, factor_b: b }))
    }

    pub fn pair_count(k: usize) -> usize {
        k * k.saturating_sub(1) / 2
    }

    pub(crate) fn check(self, k: usize) -> Result<()> {
        if self.factor_b >= k {
            return Err(Error::FactorIndex {
                index: self.factor_b,
                factors: k,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.factor_a, self.factor_b)
    }
}

/// A user's answer to a tradeoff question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    PreferA,
    PreferB,
    /// The two factors matter about equally.
    Neutral,
    /// Both factors matter a lot.
    BothImportant,
}

impl Response {
    pub const ALL: [Response; 4] = [
        Response::PreferA,
        Response::PreferB,
        Response::Neutral,
        Response::BothImportant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Response::PreferA => "prefer_a",
            Response::PreferB => "prefer_b",
            Response::Neutral => "neutral",
            Response::BothImportant => "both_important",
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognized response {0:?} (expected a, b, neutral or both)")]
pub struct ParseResponseError(pub String);

impl FromStr for Response {
    type Err = ParseResponseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" | "prefer_a" => Ok(Response::PreferA),
            "b" | "prefer_b" => Ok(Response::PreferB),
            "n" | "neutral" | "equal" => Ok(Response::Neutral),
            "both" | "both_important" => Ok(Response::BothImportant),
            _ => Err(ParseResponseError(s.to_string())),
        }
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sharpness kappa must be positive, got {kappa}"
        )));
    }
    Ok(())
}

/// Likelihood of `response` to `question` for a user whose true weights are `weights`.
///
/// Values lie in `(0, 1]`. Neutral peaks at 1 when the two weights agree;
/// BothImportant rewards both weights sitting above the uniform share `1/K`.
pub(crate) fn likelihood(weights: &[f64], q: Question, r: Response, kappa: f64) -> f64 {
    let wa = weights[q.factor_a];
    let wb = weights[q.factor_b];
    match r {
        Response::PreferA => sigmoid(kappa * (wa - wb)),
        Response::PreferB => sigmoid(kappa * (wb - wa)),
        Response::Neutral => 4.0 * sigmoid(kappa * (wa - wb)) * sigmoid(kappa * (wb - wa)),
        Response::BothImportant => {
            let share = 1.0 / weights.len() as f64;
            sigmoid(kappa * (wa - share)) * sigmoid(kappa * (wb - share))
        }
    }
}

/// Probability that a persona with preferences `persona` gives `response` to `question`.
pub fn response_likelihood(
    persona: &PreferenceVector,
    question: Question,
    response: Response,
    kappa: f64,
) -> Result<f64> {
    question.check(persona.len())?;
    check_kappa(kappa)?;
    Ok(likelihood(persona.as_slice(), question, response, kappa))
}

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::eig::outcomes_with_best;
use super::particles::ParticleSet;
use super::{check_kappa, Question, Response};
use crate::decision::{bucket_distribution, particle_best_options, DecisionDistribution};
use crate::error::{Error, Result};
use crate::matrix::{rank_descending, ScoringMatrix};

/// Upper bound on the default question budget.
pub const DEFAULT_QUESTION_CAP: usize = 20;

/// Default likelihood sharpness. With about eleven factors a typical weight gap of
/// 0.1 gives a likelihood ratio of about e^2 per answer.
pub const DEFAULT_KAPPA: f64 = 20.0;

/// Tunables for one elicitation dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElicitationConfig {
    /// Sigmoid sharpness of the response likelihood.
    pub kappa: f64,
    /// Stop once `max χ` reaches this confidence.
    pub tau: f64,
    /// Question budget; `None` means `min(20, K(K−1)/2)`.
    pub max_questions: Option<usize>,
    /// Number of personas sampled from the prior.
    pub particle_count: usize,
    pub allow_repeat_questions: bool,
}

impl Default for ElicitationConfig {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            tau: 0.85,
            max_questions: None,
            particle_count: 500,
            allow_repeat_questions: false,
        }
    }
}

impl ElicitationConfig {
    /// `tau = 0` is accepted and means "never ask".
    pub fn validate(&self) -> Result<()> {
        check_kappa(self.kappa)?;
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidConfig(format!(
                "tau must lie in [0, 1], got {}",
                self.tau
            )));
        }
        if self.particle_count == 0 {
            return Err(Error::InvalidConfig("particle_count must be at least 1".into()));
        }
        Ok(())
    }

    /// The effective question budget for `factors` factors.
    pub fn question_budget(&self, factors: usize) -> usize {
        self.max_questions
            .unwrap_or_else(|| DEFAULT_QUESTION_CAP.min(Question::pair_count(factors)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ConfidenceReached,
    BudgetExhausted,
    NoQuestionsLeft,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::ConfidenceReached => "confidence_reached",
            StopReason::BudgetExhausted => "budget_exhausted",
            StopReason::NoQuestionsLeft => "no_questions_left",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Stopped(StopReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCheck {
    Continue,
    Stop(StopReason),
}

/// One answered question and the confidence `max χ` right after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub question: Question,
    pub response: Response,
    pub confidence_after: f64,
}

/// Options ranked by posterior expected utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// Option indices, best first.
    pub ranking: Vec<usize>,
    /// Expected utility of each option, indexed by option.
    pub expected_utilities: Vec<f64>,
}

impl Recommendation {
    pub fn best(&self) -> usize {
        self.ranking[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub ranking: Vec<usize>,
    pub expected_utilities: Vec<f64>,
    pub question_count: usize,
    pub transcript: Vec<Exchange>,
    pub final_distribution: DecisionDistribution,
    pub stop_reason: Option<StopReason>,
}

/// State of one elicitation dialogue.
///
/// A session is `Active` until the stopping rule fires; after that every answer
/// is rejected.
#[derive(Debug, Clone)]
pub struct SessionState {
    matrix: ScoringMatrix,
    particles: ParticleSet,
    best: Vec<usize>,
    config: ElicitationConfig,
    budget: usize,
    asked: BTreeSet<Question>,
    transcript: Vec<Exchange>,
    status: SessionStatus,
}

impl SessionState {
    /// Starts a session with `config.particle_count` personas from the uniform prior.
    pub fn new<R: Rng + ?Sized>(
        matrix: ScoringMatrix,
        config: ElicitationConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let particles = ParticleSet::sample_prior(config.particle_count, matrix.factors(), rng)?;
        Self::with_particles(matrix, particles, config)
    }

    /// Starts a session from an explicit particle set.
    pub fn with_particles(
        matrix: ScoringMatrix,
        particles: ParticleSet,
        config: ElicitationConfig,
    ) -> Result<Self> {
        config.validate()?;
        if particles.dimension() != matrix.factors() {
            return Err(Error::DimensionMismatch {
                expected: matrix.factors(),
                actual: particles.dimension(),
            });
        }
        let best = particle_best_options(&particles, &matrix);
        let budget = config.question_budget(matrix.factors());
        let mut state = Self {
            matrix,
            particles,
            best,
            config,
            budget,
            asked: BTreeSet::new(),
            transcript: Vec::new(),
            status: SessionStatus::Active,
        };
        state.refresh_status();
        Ok(state)
    }

    pub fn matrix(&self) -> &ScoringMatrix {
        &self.matrix
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn config(&self) -> &ElicitationConfig {
        &self.config
    }

    pub fn question_budget(&self) -> usize {
        self.budget
    }

    pub fn transcript(&self) -> &[Exchange] {
        &self.transcript
    }

    pub fn questions_asked(&self) -> usize {
        self.transcript.len()
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn is_active(&self) -> bool {
        self.status == SessionStatus::Active
    }

    pub fn distribution(&self) -> DecisionDistribution {
        let probs = bucket_distribution(
            self.matrix.options(),
            &self.best,
            self.particles.weights().iter().copied(),
        );
        DecisionDistribution::from_probs(probs).expect("bucket distribution is normalized")
    }

    pub fn confidence(&self) -> f64 {
        self.distribution().confidence()
    }

    fn is_eligible(&self, q: Question) -> bool {
        self.config.allow_repeat_questions || !self.asked.contains(&q)
    }

    fn has_eligible_question(&self) -> bool {
        Question::all_pairs(self.matrix.factors()).any(|q| self.is_eligible(q))
    }

    /// EIG of `question` under the current posterior.
    pub fn expected_information_gain(&self, question: Question) -> Result<f64> {
        question.check(self.matrix.factors())?;
        Ok(outcomes_with_best(
            &self.particles,
            &self.best,
            self.matrix.options(),
            question,
            self.config.kappa,
        )
        .information_gain())
    }

    /// The eligible pair with the largest EIG; ties go to the lexicographically first pair.
    pub fn select_question(&self) -> Option<Question> {
        let mut chosen: Option<(Question, f64)> = None;
        for q in Question::all_pairs(self.matrix.factors()).filter(|&q| self.is_eligible(q)) {
            let gain = outcomes_with_best(
                &self.particles,
                &self.best,
                self.matrix.options(),
                q,
                self.config.kappa,
            )
            .information_gain();
            if chosen.is_none_or(|(_, g)| gain > g) {
                chosen = Some((q, gain));
            }
        }
        chosen.map(|(q, _)| q)
    }

    /// Stopping rule, checked in priority order: confidence, budget, exhausted pool.
    pub fn should_stop(&self) -> StopCheck {
        if self.confidence() >= self.config.tau {
            StopCheck::Stop(StopReason::ConfidenceReached)
        } else if self.transcript.len() >= self.budget {
            StopCheck::Stop(StopReason::BudgetExhausted)
        } else if !self.has_eligible_question() {
            StopCheck::Stop(StopReason::NoQuestionsLeft)
        } else {
            StopCheck::Continue
        }
    }

    fn refresh_status(&mut self) {
        if let (SessionStatus::Active, StopCheck::Stop(reason)) = (self.status, self.should_stop()) {
            self.status = SessionStatus::Stopped(reason);
        }
    }

    /// Applies a real answer to the live posterior and re-evaluates the stopping rule.
    pub fn answer(&mut self, question: Question, response: Response) -> Result<&Exchange> {
        if let SessionStatus::Stopped(reason) = self.status {
            return Err(Error::SessionStopped(reason));
        }
        question.check(self.matrix.factors())?;
        if !self.is_eligible(question) {
            return Err(Error::AlreadyAsked(question.factor_a(), question.factor_b()));
        }
        self.particles.update(question, response, self.config.kappa)?;
        self.asked.insert(question);
        let confidence_after = self.confidence();
        self.transcript.push(Exchange {
            question,
            response,
            confidence_after,
        });
        self.refresh_status();
        Ok(self.transcript.last().expect("just pushed"))
    }

    pub fn recommend(&self) -> Recommendation {
        recommend_unchecked(&self.particles, &self.matrix)
    }

    pub fn result(&self) -> SessionResult {
        let rec = self.recommend();
        SessionResult {
            ranking: rec.ranking,
            expected_utilities: rec.expected_utilities,
            question_count: self.transcript.len(),
            transcript: self.transcript.clone(),
            final_distribution: self.distribution(),
            stop_reason: match self.status {
                SessionStatus::Active => None,
                SessionStatus::Stopped(r) => Some(r),
            },
        }
    }
}

/// Free-function form of [`SessionState::select_question`].
pub fn select_question(state: &SessionState) -> Option<Question> {
    state.select_question()
}

/// Free-function form of [`SessionState::should_stop`].
pub fn should_stop(state: &SessionState) -> StopCheck {
    state.should_stop()
}

fn recommend_unchecked(particles: &ParticleSet, matrix: &ScoringMatrix) -> Recommendation {
    let mut expected = vec![0.0; matrix.options()];
    for (v, &pi) in particles.vectors().iter().zip(particles.weights()) {
        for (i, e) in expected.iter_mut().enumerate() {
            *e += pi * matrix.utility_of(i, v.as_slice());
        }
    }
    Recommendation {
        ranking: rank_descending(&expected),
        expected_utilities: expected,
    }
}

/// Ranks options by posterior expected utility `Σ_p π_p (S w_p)_i`.
pub fn recommend(particles: &ParticleSet, matrix: &ScoringMatrix) -> Result<Recommendation> {
    if particles.dimension() != matrix.factors() {
        return Err(Error::DimensionMismatch {
            expected: matrix.factors(),
            actual: particles.dimension(),
        });
    }
    Ok(recommend_unchecked(particles, matrix))
}

/// A session that ended before the stopping rule fired.
#[derive(Debug)]
pub enum SessionAborted<E> {
    /// Invalid configuration or numeric failure inside the engine.
    Engine(Error),
    /// The responder failed; `partial` holds the recommendation and transcript so far.
    Responder { partial: Box<SessionResult>, source: E },
}

impl<E: fmt::Display> fmt::Display for SessionAborted<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionAborted::Engine(e) => write!(f, "{e}"),
            SessionAborted::Responder { partial, source } => write!(
                f,
                "responder failed after {} questions: {source}",
                partial.question_count
            ),
        }
    }
}

impl<E: std::error::Error + 'static> std::error::Error for SessionAborted<E> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SessionAborted::Engine(e) => Some(e),
            SessionAborted::Responder { source, .. } => Some(source),
        }
    }
}

impl<E> From<Error> for SessionAborted<E> {
    fn from(e: Error) -> Self {
        SessionAborted::Engine(e)
    }
}

/// Runs a full dialogue: sample the prior, then ask, update and re-check until the
/// stopping rule fires.
pub fn run_session<R, F, E>(
    matrix: &ScoringMatrix,
    mut responder: F,
    config: &ElicitationConfig,
    rng: &mut R,
) -> std::result::Result<SessionResult, SessionAborted<E>>
where
    R: Rng + ?Sized,
    F: FnMut(Question) -> std::result::Result<Response, E>,
{
    let mut state = SessionState::new(matrix.clone(), config.clone(), rng)?;
    while state.is_active() {
        let question = state
            .select_question()
            .expect("an active session always has an eligible question");
        match responder(question) {
            Ok(response) => {
                state.answer(question, response)?;
            }
            Err(source) => {
                return Err(SessionAborted::Responder {
                    partial: Box::new(state.result()),
                    source,
                })
            }
        }
    }
    Ok(state.result())
}

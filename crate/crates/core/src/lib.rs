//! Bayesian pairwise preference elicitation over an option-scoring matrix.
//!
//! A decision is an `M × K` matrix `S` of option scores in `[0, 1]` and a latent
//! preference vector `w` on the simplex; the chosen option is `argmax S w`. The engine
//! keeps a weighted particle posterior over `w`, asks the tradeoff question whose answer
//! is expected to tell it most about the best option, and stops once it is confident.
//!
//! ```
//! use decisive_core::{run_session, ElicitationConfig, Response, ScoringMatrix};
//! use rand::SeedableRng;
//!
//! let matrix = ScoringMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let answers = |_q| Ok::<_, std::convert::Infallible>(Response::PreferA);
//! let result = run_session(&matrix, answers, &ElicitationConfig::default(), &mut rng).unwrap();
//! assert_eq!(result.ranking[0], 0);
//! ```

pub mod decision;
pub mod elicitation;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod prefs;
pub mod scoring;
pub mod sim;

pub use decision::{decision_distribution, entropy, DecisionDistribution};
pub use elicitation::{
    expected_information_gain, recommend, response_likelihood, run_session, select_question,
    should_stop, sigmoid, ElicitationConfig, Exchange, ParticleSet, Question, Recommendation,
    Response, SessionAborted, SessionResult, SessionState, SessionStatus, StopCheck, StopReason,
};
pub use error::{Error, Result};
pub use matrix::{best_option, rank_descending, utilities, ScoringMatrix};
pub use metrics::{aggregate, ndcg_at_3, reciprocal_rank, top_k_hit, MetricsReport, TrialOutcome};
pub use prefs::{sample_simplex, PreferenceVector};
pub use scoring::{OrdinalLevel, Scenario, ScoringError};
pub use sim::{
    generate_synthetic_scenario, run_trials, simulate_response, ResponderMode, ScenarioSource,
    SimulatedUser, TrialConfig,
};

pub use rand_chacha::ChaCha8Rng;

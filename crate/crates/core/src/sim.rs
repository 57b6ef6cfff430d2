//! Simulated users, synthetic scenarios, and the batch trial runner.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elicitation::{run_session, sigmoid, ElicitationConfig, Question, Response, SessionAborted, StopReason};
use crate::error::{Error, Result};
use crate::matrix::{best_option, rank_descending, utilities, ScoringMatrix};
use crate::metrics::{aggregate, MetricsReport, TrialOutcome};
use crate::prefs::{sample_simplex, PreferenceVector};
use crate::scoring::Scenario;

/// How a simulated user turns latent weights into answers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponderMode {
    /// `PreferA` iff `w*_a > w*_b`; ties go to `PreferB`.
    Deterministic,
    /// `PreferA` with probability `σ((w*_a − w*_b) / T)`.
    BradleyTerry { temperature: f64 },
}

impl ResponderMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ResponderMode::Deterministic => Ok(()),
            ResponderMode::BradleyTerry { temperature } if temperature > 0.0 && temperature.is_finite() => Ok(()),
            ResponderMode::BradleyTerry { temperature } => Err(Error::InvalidConfig(format!(
                "Bradley-Terry temperature must be positive, got {temperature}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedUser {
    pub true_prefs: PreferenceVector,
    pub mode: ResponderMode,
}

impl SimulatedUser {
    pub fn new(true_prefs: PreferenceVector, mode: ResponderMode) -> Result<Self> {
        mode.validate()?;
        Ok(Self { true_prefs, mode })
    }

    pub fn respond<R: Rng + ?Sized>(&self, question: Question, rng: &mut R) -> Result<Response> {
        simulate_response(self, question, rng)
    }
}

pub fn simulate_response<R: Rng + ?Sized>(
    user: &SimulatedUser,
    question: Question,
    rng: &mut R,
) -> Result<Response> {
    let k = user.true_prefs.len();
    let (a, b) = (question.factor_a(), question.factor_b());
    for index in [a, b] {
        if index >= k {
            return Err(Error::FactorIndex { index, factors: k });
        }
    }
    let diff = user.true_prefs.weight(a) - user.true_prefs.weight(b);
    let prefer_a = match user.mode {
        ResponderMode::Deterministic => diff > 0.0,
        ResponderMode::BradleyTerry { temperature } => {
            user.mode.validate()?;
            rng.random::<f64>() < sigmoid(diff / temperature)
        }
    };
    Ok(if prefer_a { Response::PreferA } else { Response::PreferB })
}

/// Levels a synthetic matrix cell can take.
pub const GRID_LEVELS: usize = 8;

/// An `options × factors` scenario with cells drawn uniformly from `{0, 1/7, …, 1}`.
pub fn generate_synthetic_scenario<R: Rng + ?Sized>(
    options: usize,
    factors: usize,
    rng: &mut R,
) -> Result<Scenario> {
    if options < 2 || factors < 2 {
        return Err(Error::InvalidConfig(format!(
            "synthetic scenarios need at least 2 options and 2 factors, got {options}x{factors}"
        )));
    }
    let rows = (0..options)
        .map(|_| {
            (0..factors)
                .map(|_| rng.random_range(0..GRID_LEVELS) as f64 / (GRID_LEVELS - 1) as f64)
                .collect()
        })
        .collect();
    let matrix = ScoringMatrix::from_rows(rows)?;
    Ok(Scenario::from_matrix(
        format!("synthetic {options}x{factors} decision"),
        matrix,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    /// A fresh grid-valued scenario per trial.
    Synthetic { options: usize, factors: usize },
    /// The same scenario for every trial. Its `ground_truth_prefs`, when set, replaces
    /// the per-trial draw of `w*`.
    Fixed(Scenario),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub source: ScenarioSource,
    pub trials: usize,
    pub elicitation: ElicitationConfig,
    pub responder: ResponderMode,
    pub base_seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::NoTrials);
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        if let ScenarioSource::Synthetic { options, factors } = self.source {
            if options < 2 || factors < 2 {
                return Err(Error::InvalidConfig(format!(
                    "synthetic scenarios need at least 2 options and 2 factors, got {options}x{factors}"
                )));
            }
        }
        if let ScenarioSource::Fixed(s) = &self.source {
            if let Some(w) = &s.ground_truth_prefs {
                if w.len() != s.matrix.factors() {
                    return Err(Error::DimensionMismatch { expected: s.matrix.factors(), actual: w.len() });
                }
            }
        }
        self.elicitation.validate()?;
        self.responder.validate()
    }
}

/// Independent random streams used by one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Scenario = 0,
    TruePrefs = 1,
    Particles = 2,
    Responder = 3,
}

/// The generator for `(base, trial, purpose)`. Streams never overlap, so trial `t`
/// replays in isolation and the same draws are shared across configurations.
pub fn trial_rng(base_seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream((trial << 2) | purpose as u64);
    rng
}

/// Everything recorded about one simulated dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub true_prefs: PreferenceVector,
    pub true_ranking: Vec<usize>,
    pub predicted_ranking: Vec<usize>,
    pub stop_reason: Option<StopReason>,
    pub final_confidence: f64,
    pub outcome: TrialOutcome,
}

/// Runs trial `trial` of `config` on its own.
pub fn run_trial(config: &TrialConfig, trial: usize) -> Result<TrialRecord> {
    let t = trial as u64;
    let seed = config.base_seed;
    let generated;
    let scenario = match &config.source {
        ScenarioSource::Synthetic { options, factors } => {
            generated = generate_synthetic_scenario(*options, *factors, &mut trial_rng(seed, t, Purpose::Scenario))?;
            &generated
        }
        ScenarioSource::Fixed(s) => s,
    };
    let matrix = &scenario.matrix;
    let true_prefs = match &scenario.ground_truth_prefs {
        Some(w) => w.clone(),
        None => sample_simplex(matrix.factors(), 1.0, &mut trial_rng(seed, t, Purpose::TruePrefs))?,
    };
    let true_ranking = rank_descending(&utilities(matrix, &true_prefs)?);
    debug_assert_eq!(true_ranking[0], best_option(matrix, &true_prefs)?);

    let user = SimulatedUser::new(true_prefs, config.responder)?;
    let mut responder_rng = trial_rng(seed, t, Purpose::Responder);
    let responder = |q: Question| -> std::result::Result<Response, Error> {
        simulate_response(&user, q, &mut responder_rng)
    };
    let mut particle_rng = trial_rng(seed, t, Purpose::Particles);
    let result = run_session(matrix, responder, &config.elicitation, &mut particle_rng).map_err(|e| match e {
        SessionAborted::Engine(e) => e,
        SessionAborted::Responder { source, .. } => source,
    })?;

    let outcome = TrialOutcome::score(&result.ranking, &true_ranking, result.question_count)?;
    Ok(TrialRecord {
        trial,
        true_prefs: user.true_prefs,
        true_ranking,
        predicted_ranking: result.ranking,
        stop_reason: result.stop_reason,
        final_confidence: result.final_distribution.confidence(),
        outcome,
    })
}

/// Runs every trial, in parallel, and returns the records in trial order.
pub fn run_trials_detailed(config: &TrialConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let run = || {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect::<Result<Vec<_>>>()
    };
    match config.jobs {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start {n} worker threads: {e}")))?
            .install(run),
    }
}

/// Runs every trial and aggregates the metrics. Bit-identical for a fixed config,
/// whatever the thread count.
pub fn run_trials(config: &TrialConfig) -> Result<MetricsReport> {
    let records = run_trials_detailed(config)?;
    let outcomes: Vec<TrialOutcome> = records.into_iter().map(|r| r.outcome).collect();
    aggregate(&outcomes)
}

/// One configuration's line in a report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub top1: f64,
    pub top2: f64,
    pub ndcg3: f64,
    pub mrr: f64,
    pub avg_questions: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ReportRow {
    pub fn new(report: &MetricsReport, seed: u64) -> Self {
        Self {
            top1: report.top1,
            top2: report.top2,
            ndcg3: report.ndcg3,
            mrr: report.mrr,
            avg_questions: report.avg_questions,
            trials: report.trials,
            seed,
        }
    }
}

pub fn write_report_json<W: Write>(rows: &[ReportRow], mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n")
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], out: W) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()
}

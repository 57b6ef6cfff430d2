use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("scoring matrix must have at least one option and one factor")]
    EmptyMatrix,

    #[error("matrix row {row} has {actual} columns, expected {expected}")]
    RaggedMatrix {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("matrix cell ({row}, {col}) = {value} is outside [0, 1]")]
    ScoreOutOfRange { row: usize, col: usize, value: f64 },

    #[error("{what}: expected {expected} labels, got {actual}")]
    LabelCount {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid preference vector: {0}")]
    InvalidPreferences(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("particle set is empty")]
    EmptyParticles,

    #[error("invalid particle weights: {0}")]
    InvalidWeights(String),

    #[error("factor index {index} out of range for {factors} factors")]
    FactorIndex { index: usize, factors: usize },

    #[error("option index {index} out of range for {options} options")]
    OptionIndex { index: usize, options: usize },

    #[error("invalid question ({0}, {1}): factors must satisfy a < b")]
    InvalidQuestion(usize, usize),

    #[error("all likelihoods underflowed; posterior is degenerate")]
    NumericDegeneracy,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("session has stopped ({0}); no further answers are accepted")]
    SessionStopped(crate::elicitation::StopReason),

    #[error("pair ({0}, {1}) was already asked")]
    AlreadyAsked(usize, usize),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("no trial outcomes to aggregate")]
    NoTrials,
}

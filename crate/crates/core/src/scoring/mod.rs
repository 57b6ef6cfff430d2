//! Building the option-scoring matrix from ordinal assessments.
//!
//! Each option/factor cell is rated by one or more assessors on an eight-level
//! ordinal scale. Ratings are combined with the median by rank and then mapped to
//! a number in `[0, 1]`.

mod assessor;
mod scenario;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::matrix::ScoringMatrix;

pub use assessor::{
    extract_factors, score_cell, score_grid, Assessor, AssessorRequest, ReplayAssessor,
    ReplayRecord, StubAssessor, DEFAULT_MAX_IN_FLIGHT,
};
#[cfg(feature = "http")]
pub use assessor::HttpAssessor;
pub use scenario::{FactorSpec, OptionSpec, Scenario, ScenarioFile};

/// Largest factor list accepted from an extractor or a scenario file.
pub const MAX_FACTORS: usize = 30;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("unrecognized ordinal label {raw:?}")]
    UnknownLabel { raw: String },

    #[error("assessor transport failure: {0}")]
    Transport(String),

    #[error("no assessment for option {option}, factor {factor}")]
    MissingCell { option: usize, factor: usize },

    #[error("duplicate assessment for option {option}, factor {factor}")]
    DuplicateCell { option: usize, factor: usize },

    #[error("assessment for option {option}, factor {factor} is out of range")]
    CellOutOfRange { option: usize, factor: usize },

    #[error("assessment for option {option}, factor {factor} has no ratings")]
    EmptyRatings { option: usize, factor: usize },

    #[error("cannot take the median of an empty rating list")]
    NoRatings,

    #[error("factor extraction returned no factors")]
    EmptyFactorList,

    #[error("factor extraction returned {0} factors (limit {MAX_FACTORS})")]
    TooManyFactors(usize),

    #[error("duplicate factor name {0:?}")]
    DuplicateFactor(String),

    #[error("invalid scenario at `{field}`: {message}")]
    InvalidScenario { field: String, message: String },

    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] Error),
}

/// The eight-point assessment scale, ordered from worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrdinalLevel {
    VeryLow,
    Low,
    LowToMedium,
    Medium,
    MediumToHigh,
    High,
    HighToVeryHigh,
    VeryHigh,
}

impl OrdinalLevel {
    pub const ALL: [OrdinalLevel; 8] = [
        OrdinalLevel::VeryLow,
        OrdinalLevel::Low,
        OrdinalLevel::LowToMedium,
        OrdinalLevel::Medium,
        OrdinalLevel::MediumToHigh,
        OrdinalLevel::High,
        OrdinalLevel::HighToVeryHigh,
        OrdinalLevel::VeryHigh,
    ];

    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn from_rank(rank: usize) -> Option<Self> {
        Self::ALL.get(rank).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            OrdinalLevel::VeryLow => "Very Low",
            OrdinalLevel::Low => "Low",
            OrdinalLevel::LowToMedium => "Low to Medium",
            OrdinalLevel::Medium => "Medium",
            OrdinalLevel::MediumToHigh => "Medium to High",
            OrdinalLevel::High => "High",
            OrdinalLevel::HighToVeryHigh => "High to Very High",
            OrdinalLevel::VeryHigh => "Very High",
        }
    }
}

impl fmt::Display for OrdinalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for OrdinalLevel {
    type Err = ScoringError;

    /// Case-insensitive match against the eight labels; runs of whitespace count as
    /// one space. Anything else, including numeric grades, is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        Self::ALL
            .into_iter()
            .find(|l| l.label().to_lowercase() == normalized)
            .ok_or_else(|| ScoringError::UnknownLabel { raw: s.to_string() })
    }
}

impl Serialize for OrdinalLevel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for OrdinalLevel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Numeric value assigned to each ordinal level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelScale([f64; 8]);

impl Default for LevelScale {
    /// Evenly spaced: `rank / 7`.
    fn default() -> Self {
        let mut v = [0.0; 8];
        for (r, x) in v.iter_mut().enumerate() {
            *x = r as f64 / 7.0;
        }
        LevelScale(v)
    }
}

impl LevelScale {
    /// Builds a scale from a label → score table. All eight labels are required and
    /// scores must be strictly increasing within `[0, 1]`.
    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self, ScoringError> {
        let invalid = |message: String| ScoringError::InvalidScenario {
            field: "label_score_map".into(),
            message,
        };
        let mut values = [f64::NAN; 8];
        for (label, &score) in map {
            let level: OrdinalLevel = label.parse()?;
            if !(0.0..=1.0).contains(&score) {
                return Err(invalid(format!("score {score} for {label:?} is outside [0, 1]")));
            }
            if !values[level.rank()].is_nan() {
                return Err(invalid(format!("label {label:?} given twice")));
            }
            values[level.rank()] = score;
        }
        if let Some(missing) = OrdinalLevel::ALL.iter().find(|l| values[l.rank()].is_nan()) {
            return Err(invalid(format!("missing label {:?}", missing.label())));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("scores must increase strictly with the level".into()));
        }
        Ok(LevelScale(values))
    }

    pub fn score(&self, level: OrdinalLevel) -> f64 {
        self.0[level.rank()]
    }
}

/// Default evenly spaced mapping of a level to `[0, 1]`.
pub fn level_to_score(level: OrdinalLevel) -> f64 {
    LevelScale::default().score(level)
}

/// Median by rank; even counts take the lower of the two middle ratings.
pub fn aggregate_median(ratings: &[OrdinalLevel]) -> Result<OrdinalLevel, ScoringError> {
    if ratings.is_empty() {
        return Err(ScoringError::NoRatings);
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_unstable();
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// All ratings collected for one option/factor cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub option: usize,
    pub factor: usize,
    pub ratings: Vec<OrdinalLevel>,
}

/// Combines a complete grid of assessments into a scoring matrix.
///
/// Exactly one assessment per cell is required; dimensions come from the label lists.
pub fn assemble_matrix(
    assessments: &[Assessment],
    option_labels: Vec<String>,
    factor_labels: Vec<String>,
    scale: &LevelScale,
) -> Result<ScoringMatrix, ScoringError> {
    let (m, k) = (option_labels.len(), factor_labels.len());
    let mut grid: Vec<Option<f64>> = vec![None; m * k];
    for a in assessments {
        if a.option >= m || a.factor >= k {
            return Err(ScoringError::CellOutOfRange {
                option: a.option,
                factor: a.factor,
            });
        }
        let cell = &mut grid[a.option * k + a.factor];
        if cell.is_some() {
            return Err(ScoringError::DuplicateCell {
                option: a.option,
                factor: a.factor,
            });
        }
        let level = aggregate_median(&a.ratings).map_err(|_| ScoringError::EmptyRatings {
            option: a.option,
            factor: a.factor,
        })?;
        *cell = Some(scale.score(level));
    }
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let row = (0..k)
            .map(|j| grid[i * k + j].ok_or(ScoringError::MissingCell { option: i, factor: j }))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(ScoringMatrix::new(rows, option_labels, factor_labels)?)
}

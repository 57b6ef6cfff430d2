use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{assemble_matrix, Assessment, LevelScale, OrdinalLevel, ScoringError, MAX_FACTORS};
use crate::error::Error;
use crate::matrix::ScoringMatrix;
use crate::prefs::PreferenceVector;

/// A candidate option and the documents describing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionSpec {
    pub name: String,
    #[serde(default)]
    pub documents: Vec<String>,
}

/// A decision factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

/// On-disk scenario layout. Exactly one of `matrix` or `raw_assessments` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub query: String,
    pub options: Vec<OptionSpec>,
    pub factors: Vec<FactorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Row-major per-cell label lists, one label per rater.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_assessments: Option<Vec<Vec<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_prefs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_score_map: Option<BTreeMap<String, f64>>,
}

/// A validated decision scenario: query, options, factors and their scoring matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    pub query: String,
    pub options: Vec<OptionSpec>,
    pub factors: Vec<FactorSpec>,
    pub matrix: ScoringMatrix,
    pub ground_truth_prefs: Option<PreferenceVector>,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScoringError {
    ScoringError::InvalidScenario {
        field: field.into(),
        message: message.into(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScoringError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScoringError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            query: self.query.clone(),
            options: self.options.clone(),
            factors: self.factors.clone(),
            matrix: Some(self.matrix.to_rows()),
            raw_assessments: None,
            ground_truth_prefs: self.ground_truth_prefs.clone().map(Vec::from),
            label_score_map: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScoringError> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Builds a scenario from a bare matrix with generated labels.
    pub fn from_matrix(query: impl Into<String>, matrix: ScoringMatrix) -> Self {
        let options = matrix
            .option_labels()
            .iter()
            .map(|n| OptionSpec { name: n.clone(), documents: vec![] })
            .collect();
        let factors = matrix
            .factor_labels()
            .iter()
            .map(|n| FactorSpec { name: n.clone(), description: String::new() })
            .collect();
        Scenario {
            query: query.into(),
            options,
            factors,
            matrix,
            ground_truth_prefs: None,
        }
    }
}

fn check_factors(factors: &[FactorSpec]) -> Result<(), ScoringError> {
    if factors.is_empty() {
        return Err(invalid("factors", "at least one factor is required"));
    }
    if factors.len() > MAX_FACTORS {
        return Err(invalid(
            "factors",
            format!("{} factors exceeds the limit of {MAX_FACTORS}", factors.len()),
        ));
    }
    let mut seen = HashSet::new();
    for (j, f) in factors.iter().enumerate() {
        if !seen.insert(f.name.as_str()) {
            return Err(invalid(format!("factors[{j}].name"), format!("duplicate name {:?}", f.name)));
        }
    }
    Ok(())
}

fn matrix_error(e: Error) -> ScoringError {
    match e {
        Error::ScoreOutOfRange { row, col, value } => invalid(
            format!("matrix[{row}][{col}]"),
            format!("{value} is outside [0, 1]"),
        ),
        Error::RaggedMatrix { row, expected, actual } => invalid(
            format!("matrix[{row}]"),
            format!("has {actual} entries, expected {expected}"),
        ),
        other => invalid("matrix", other.to_string()),
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        s.to_file()
    }
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = ScoringError;

    fn try_from(file: ScenarioFile) -> Result<Self, ScoringError> {
        if file.options.is_empty() {
            return Err(invalid("options", "at least one option is required"));
        }
        check_factors(&file.factors)?;
        let (m, k) = (file.options.len(), file.factors.len());
        let option_labels: Vec<String> = file.options.iter().map(|o| o.name.clone()).collect();
        let factor_labels: Vec<String> = file.factors.iter().map(|f| f.name.clone()).collect();

        let scale = match &file.label_score_map {
            Some(map) => LevelScale::from_map(map)?,
            None => LevelScale::default(),
        };

        let matrix = match (file.matrix, file.raw_assessments) {
            (Some(_), Some(_)) => {
                return Err(invalid("matrix", "give either matrix or raw_assessments, not both"))
            }
            (None, None) => return Err(invalid("matrix", "one of matrix or raw_assessments is required")),
            (Some(rows), None) => {
                if rows.len() != m {
                    return Err(invalid(
                        "matrix",
                        format!("has {} rows for {m} options", rows.len()),
                    ));
                }
                if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
                    return Err(invalid(
                        format!("matrix[{i}]"),
                        format!("has {} entries for {k} factors", r.len()),
                    ));
                }
                ScoringMatrix::new(rows, option_labels, factor_labels).map_err(matrix_error)?
            }
            (None, Some(raw)) => {
                if raw.len() != m {
                    return Err(invalid(
                        "raw_assessments",
                        format!("has {} rows for {m} options", raw.len()),
                    ));
                }
                let mut assessments = Vec::with_capacity(m * k);
                for (i, row) in raw.into_iter().enumerate() {
                    if row.len() != k {
                        return Err(invalid(
                            format!("raw_assessments[{i}]"),
                            format!("has {} cells for {k} factors", row.len()),
                        ));
                    }
                    for (j, labels) in row.into_iter().enumerate() {
                        let field = format!("raw_assessments[{i}][{j}]");
                        if labels.is_empty() {
                            return Err(invalid(field, "no ratings"));
                        }
                        let ratings = labels
                            .iter()
                            .map(|l| l.parse::<OrdinalLevel>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| invalid(field, e.to_string()))?;
                        assessments.push(Assessment { option: i, factor: j, ratings });
                    }
                }
                assemble_matrix(&assessments, option_labels, factor_labels, &scale)?
            }
        };

        let ground_truth_prefs = match file.ground_truth_prefs {
            None => None,
            Some(w) if w.len() != k => {
                return Err(invalid(
                    "ground_truth_prefs",
                    format!("has {} weights for {k} factors", w.len()),
                ))
            }
            Some(w) => Some(
                PreferenceVector::new(w).map_err(|e| invalid("ground_truth_prefs", e.to_string()))?,
            ),
        };

        Ok(Scenario {
            query: file.query,
            options: file.options,
            factors: file.factors,
            matrix,
            ground_truth_prefs,
        })
    }
}

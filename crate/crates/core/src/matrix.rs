//! The option-scoring matrix and the weighted-utility decision rule built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefs::PreferenceVector;

/// An M×K grid of option-on-factor scores, each in `[0, 1]`.
///
/// Rows are options, columns are factors. Values are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct ScoringMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    option_labels: Vec<String>,
    factor_labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    values: Vec<Vec<f64>>,
    option_labels: Vec<String>,
    factor_labels: Vec<String>,
}

impl TryFrom<RawMatrix> for ScoringMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        ScoringMatrix::new(raw.values, raw.option_labels, raw.factor_labels)
    }
}

impl From<ScoringMatrix> for RawMatrix {
    fn from(m: ScoringMatrix) -> Self {
        RawMatrix {
            values: m.to_rows(),
            option_labels: m.option_labels,
            factor_labels: m.factor_labels,
        }
    }
}

impl ScoringMatrix {
    pub fn new(
        rows: Vec<Vec<f64>>,
        option_labels: Vec<String>,
        factor_labels: Vec<String>,
    ) -> Result<Self> {
        let m = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if m == 0 || k == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut values = Vec::with_capacity(m * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::RaggedMatrix {
                    row: i,
                    expected: k,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::ScoreOutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            values.extend(row);
        }
        if option_labels.len() != m {
            return Err(Error::LabelCount {
                what: "option labels",
                expected: m,
                actual: option_labels.len(),
            });
        }
        if factor_labels.len() != k {
            return Err(Error::LabelCount {
                what: "factor labels",
                expected: k,
                actual: factor_labels.len(),
            });
        }
        Ok(Self {
            rows: m,
            cols: k,
            values,
            option_labels,
            factor_labels,
        })
    }

    /// Builds a matrix with generated labels (`option-1`, `factor-1`, ...).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        let options = (1..=m).map(|i| format!("option-{i}")).collect();
        let factors = (1..=k).map(|j| format!("factor-{j}")).collect();
        Self::new(rows, options, factors)
    }

    /// Number of options (M).
    pub fn options(&self) -> usize {
        self.rows
    }

    /// Number of factors (K).
    pub fn factors(&self) -> usize {
        self.cols
    }

    pub fn get(&self, option: usize, factor: usize) -> f64 {
        self.values[option * self.cols + factor]
    }

    pub fn row(&self, option: usize) -> &[f64] {
        &self.values[option * self.cols..(option + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn option_labels(&self) -> &[String] {
        &self.option_labels
    }

    pub fn factor_labels(&self) -> &[String] {
        &self.factor_labels
    }

    fn check_prefs(&self, prefs: &PreferenceVector) -> Result<()> {
        if prefs.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: prefs.len(),
            });
        }
        Ok(())
    }

    /// Utility of one option under raw weights; no dimension check.
    pub(crate) fn utility_of(&self, option: usize, weights: &[f64]) -> f64 {
        self.row(option)
            .iter()
            .zip(weights)
            .map(|(s, w)| s * w)
            .sum()
    }

    /// Index of the highest-utility option under raw weights; ties go to the lowest index.
    pub(crate) fn argmax_for(&self, weights: &[f64]) -> usize {
        let mut best = 0;
        let mut best_u = self.utility_of(0, weights);
        for i in 1..self.rows {
            let u = self.utility_of(i, weights);
            if u > best_u {
                best = i;
                best_u = u;
            }
        }
        best
    }
}

/// Weighted utility `Σ_j S_ij · w_j` of every option.
pub fn utilities(matrix: &ScoringMatrix, prefs: &PreferenceVector) -> Result<Vec<f64>> {
    matrix.check_prefs(prefs)?;
    let w = prefs.as_slice();
    Ok((0..matrix.options())
        .map(|i| matrix.utility_of(i, w))
        .collect())
}

/// The utility-maximizing option. Ties resolve to the lowest index.
pub fn best_option(matrix: &ScoringMatrix, prefs: &PreferenceVector) -> Result<usize> {
    matrix.check_prefs(prefs)?;
    Ok(matrix.argmax_for(prefs.as_slice()))
}

/// Option indices sorted by descending score, ties by ascending index.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

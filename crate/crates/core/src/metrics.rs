//! Ranking-quality metrics: Top-k hit, reciprocal rank, NDCG@3, and their means
//! over a batch of trials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_permutation(ranking: &[usize], options: usize) -> Result<()> {
    if ranking.len() != options {
        return Err(Error::InvalidRanking(format!(
            "ranking has {} entries for {options} options",
            ranking.len()
        )));
    }
    let mut seen = vec![false; options];
    for &o in ranking {
        if o >= options || std::mem::replace(&mut seen[o], true) {
            return Err(Error::InvalidRanking(format!(
                "{ranking:?} is not a permutation of 0..{options}"
            )));
        }
    }
    Ok(())
}

fn position_of(ranking: &[usize], option: usize) -> Result<usize> {
    ranking
        .iter()
        .position(|&o| o == option)
        .ok_or_else(|| Error::InvalidRanking(format!("option {option} missing from ranking")))
}

/// 1 if `true_best` appears among the first `k` entries of `predicted`, else 0.
pub fn top_k_hit(predicted: &[usize], true_best: usize, k: usize) -> Result<u8> {
    if k == 0 {
        return Err(Error::InvalidRanking("k must be at least 1".into()));
    }
    check_permutation(predicted, predicted.len())?;
    Ok(u8::from(position_of(predicted, true_best)? < k))
}

/// `1 / rank` of `true_best` (1-based).
pub fn reciprocal_rank(predicted: &[usize], true_best: usize) -> Result<f64> {
    check_permutation(predicted, predicted.len())?;
    Ok(1.0 / (position_of(predicted, true_best)? + 1) as f64)
}

/// Graded relevance for the options the ground truth ranks first, second, third.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdcgGains(pub [f64; 3]);

impl Default for NdcgGains {
    fn default() -> Self {
        NdcgGains([3.0, 2.0, 1.0])
    }
}

/// NDCG@3 with the default 3/2/1 gains.
pub fn ndcg_at_3(predicted: &[usize], true_ranking: &[usize]) -> Result<f64> {
    ndcg_at_3_with(predicted, true_ranking, NdcgGains::default())
}

/// NDCG@3: options in the true top three earn `gains`, discounted by `log2(pos + 1)`.
pub fn ndcg_at_3_with(predicted: &[usize], true_ranking: &[usize], gains: NdcgGains) -> Result<f64> {
    let options = true_ranking.len();
    check_permutation(true_ranking, options)?;
    check_permutation(predicted, options)?;

    let gain_of = |option: usize| -> f64 {
        true_ranking
            .iter()
            .take(3)
            .position(|&o| o == option)
            .map_or(0.0, |r| gains.0[r])
    };
    let discount = |pos: usize| (pos as f64 + 2.0).log2();

    let dcg: f64 = predicted
        .iter()
        .take(3)
        .enumerate()
        .map(|(pos, &o)| gain_of(o) / discount(pos))
        .sum();
    let ideal: f64 = true_ranking
        .iter()
        .take(3)
        .enumerate()
        .map(|(pos, &o)| gain_of(o) / discount(pos))
        .sum();
    if ideal <= 0.0 {
        return Err(Error::InvalidRanking("all NDCG gains are zero".into()));
    }
    Ok(dcg / ideal)
}

/// Scores of one simulated dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub top1: u8,
    pub top2: u8,
    pub ndcg3: f64,
    pub reciprocal_rank: f64,
    pub questions: usize,
}

impl TrialOutcome {
    /// Scores `predicted` against the ground-truth utility order.
    pub fn score(predicted: &[usize], true_ranking: &[usize], questions: usize) -> Result<Self> {
        let true_best = *true_ranking
            .first()
            .ok_or_else(|| Error::InvalidRanking("empty ranking".into()))?;
        Ok(Self {
            top1: top_k_hit(predicted, true_best, 1)?,
            top2: top_k_hit(predicted, true_best, 2)?,
            ndcg3: ndcg_at_3(predicted, true_ranking)?,
            reciprocal_rank: reciprocal_rank(predicted, true_best)?,
            questions,
        })
    }
}

/// Means over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub top1: f64,
    pub top2: f64,
    pub ndcg3: f64,
    pub mrr: f64,
    pub avg_questions: f64,
    pub trials: usize,
}

/// Arithmetic means of per-trial values, accumulated in input order.
pub fn aggregate(outcomes: &[TrialOutcome]) -> Result<MetricsReport> {
    if outcomes.is_empty() {
        return Err(Error::NoTrials);
    }
    let n = outcomes.len() as f64;
    let mean = |f: &dyn Fn(&TrialOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
    Ok(MetricsReport {
        top1: mean(&|o| f64::from(o.top1)),
        top2: mean(&|o| f64::from(o.top2)),
        ndcg3: mean(&|o| o.ndcg3),
        mrr: mean(&|o| o.reciprocal_rank),
        avg_questions: mean(&|o| o.questions as f64),
        trials: outcomes.len(),
    })
}

//! Provider-agnostic assessor clients used to extract factors and rate cells.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::scenario::{FactorSpec, OptionSpec};
use super::{Assessment, OrdinalLevel, ScoringError, MAX_FACTORS};

/// Default bound on concurrent assessor requests.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

/// A prompt plus routing metadata (`task`, `option`, `factor`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessorRequest {
    pub prompt: String,
    pub metadata: BTreeMap<String, String>,
}

/// Anything that turns a prompt into response text.
pub trait Assessor: Send + Sync {
    fn complete(&self, request: &AssessorRequest) -> Result<String, ScoringError>;
}

/// In-process assessor for tests and offline use.
pub struct StubAssessor {
    respond: Box<dyn Fn(&AssessorRequest) -> Result<String, ScoringError> + Send + Sync>,
}

impl StubAssessor {
    /// Returns `text` for every request.
    pub fn fixed(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::from_fn(move |_| Ok(text.clone()))
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&AssessorRequest) -> Result<String, ScoringError> + Send + Sync + 'static,
    {
        Self { respond: Box::new(f) }
    }
}

impl Assessor for StubAssessor {
    fn complete(&self, request: &AssessorRequest) -> Result<String, ScoringError> {
        (self.respond)(request)
    }
}

/// One recorded exchange in a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayRecord {
    pub metadata: BTreeMap<String, String>,
    pub response: String,
}

/// Answers from a JSON file of recorded responses, matched on request metadata.
#[derive(Debug, Clone)]
pub struct ReplayAssessor {
    records: BTreeMap<BTreeMap<String, String>, String>,
}

impl ReplayAssessor {
    pub fn new(records: Vec<ReplayRecord>) -> Self {
        Self {
            records: records.into_iter().map(|r| (r.metadata, r.response)).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScoringError> {
        let records: Vec<ReplayRecord> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(Self::new(records))
    }
}

impl Assessor for ReplayAssessor {
    fn complete(&self, request: &AssessorRequest) -> Result<String, ScoringError> {
        self.records.get(&request.metadata).cloned().ok_or_else(|| {
            ScoringError::Transport(format!("no recorded response for {:?}", request.metadata))
        })
    }
}

#[cfg(feature = "http")]
pub use http::HttpAssessor;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde::Deserialize;

    use super::{Assessor, AssessorRequest, ScoringError};

    /// Posts each request as JSON to a single endpoint and expects `{"text": ...}` back.
    ///
    /// Configured from `DECISIVE_ASSESSOR_URL`, `DECISIVE_ASSESSOR_TIMEOUT_MS` (default
    /// 30000) and `DECISIVE_ASSESSOR_RETRIES` (default 2).
    #[derive(Debug, Clone)]
    pub struct HttpAssessor {
        url: String,
        retries: u32,
        client: reqwest::blocking::Client,
    }

    #[derive(Deserialize)]
    struct Reply {
        text: String,
    }

    impl HttpAssessor {
        pub fn new(url: impl Into<String>, timeout: Duration, retries: u32) -> Result<Self, ScoringError> {
            let client = reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .map_err(|e| ScoringError::Transport(e.to_string()))?;
            Ok(Self { url: url.into(), retries, client })
        }

        pub fn from_env() -> Result<Self, ScoringError> {
            let url = std::env::var("DECISIVE_ASSESSOR_URL")
                .map_err(|_| ScoringError::Transport("DECISIVE_ASSESSOR_URL is not set".into()))?;
            let parse = |name: &str, default: u64| -> Result<u64, ScoringError> {
                match std::env::var(name) {
                    Ok(v) => v
                        .parse()
                        .map_err(|_| ScoringError::Transport(format!("{name}={v:?} is not an integer"))),
                    Err(_) => Ok(default),
                }
            };
            let timeout = Duration::from_millis(parse("DECISIVE_ASSESSOR_TIMEOUT_MS", 30_000)?);
            let retries = parse("DECISIVE_ASSESSOR_RETRIES", 2)? as u32;
            Self::new(url, timeout, retries)
        }

        fn attempt(&self, request: &AssessorRequest) -> Result<String, String> {
            let resp = self
                .client
                .post(&self.url)
                .json(request)
                .send()
                .map_err(|e| e.to_string())?;
            let status = resp.status();
            if !status.is_success() {
                return Err(format!("HTTP {status}"));
            }
            resp.json::<Reply>().map(|r| r.text).map_err(|e| e.to_string())
        }
    }

    impl Assessor for HttpAssessor {
        fn complete(&self, request: &AssessorRequest) -> Result<String, ScoringError> {
            let mut last = String::new();
            for _ in 0..=self.retries {
                match self.attempt(request) {
                    Ok(text) => return Ok(text),
                    Err(e) => last = e,
                }
            }
            Err(ScoringError::Transport(format!(
                "{} failed after {} attempts: {last}",
                self.url,
                self.retries + 1
            )))
        }
    }
}

fn request(prompt: String, pairs: &[(&str, &str)]) -> AssessorRequest {
    AssessorRequest {
        prompt,
        metadata: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
    }
}

fn join_documents(documents: &[String]) -> String {
    documents
        .iter()
        .enumerate()
        .map(|(i, d)| format!("[Document {}]\n{d}", i + 1))
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FactorItem {
    Name(String),
    Spec { name: String, #[serde(default)] description: String },
}

fn parse_factor_list(text: &str) -> Vec<FactorSpec> {
    if let Ok(items) = serde_json::from_str::<Vec<FactorItem>>(text.trim()) {
        return items
            .into_iter()
            .map(|item| match item {
                FactorItem::Name(name) => FactorSpec { name: name.trim().to_string(), description: String::new() },
                FactorItem::Spec { name, description } => FactorSpec { name: name.trim().to_string(), description },
            })
            .collect();
    }
    text.lines()
        .map(|l| l.trim().trim_start_matches(['-', '*']).trim())
        .map(|l| {
            // Drop "1." / "2)" list numbering.
            let digits = l.chars().take_while(char::is_ascii_digit).count();
            match l[digits..].chars().next() {
                Some('.') | Some(')') if digits > 0 => l[digits + 1..].trim(),
                _ => l,
            }
        })
        .filter(|l| !l.is_empty())
        .map(|l| match l.split_once(':') {
            Some((name, desc)) => FactorSpec { name: name.trim().to_string(), description: desc.trim().to_string() },
            None => FactorSpec { name: l.to_string(), description: String::new() },
        })
        .collect()
}

/// Asks the assessor for the decision-relevant factors.
///
/// The reply may be a JSON array (of names or `{name, description}` objects) or one
/// factor per line, optionally `name: description`.
pub fn extract_factors(
    query: &str,
    documents: &[String],
    client: &dyn Assessor,
) -> Result<Vec<FactorSpec>, ScoringError> {
    let prompt = format!(
        "Decision question: {query}\n\n{}\n\nList the factors that matter for this decision \
         as a JSON array of {{\"name\", \"description\"}} objects. Use unique names.",
        join_documents(documents)
    );
    let text = client.complete(&request(prompt, &[("task", "extract_factors")]))?;
    let factors = parse_factor_list(&text);
    if factors.is_empty() {
        return Err(ScoringError::EmptyFactorList);
    }
    if factors.len() > MAX_FACTORS {
        return Err(ScoringError::TooManyFactors(factors.len()));
    }
    let mut seen = HashSet::new();
    for f in &factors {
        if !seen.insert(f.name.to_lowercase()) {
            return Err(ScoringError::DuplicateFactor(f.name.clone()));
        }
    }
    Ok(factors)
}

/// Asks the assessor to rate one option on one factor. The reply must be exactly one
/// of the eight scale labels.
pub fn score_cell(
    option: &OptionSpec,
    factor: &FactorSpec,
    client: &dyn Assessor,
) -> Result<OrdinalLevel, ScoringError> {
    let labels = OrdinalLevel::ALL.map(OrdinalLevel::label).join(", ");
    let prompt = format!(
        "Option: {}\n\n{}\n\nFactor: {} ({})\n\nRate this option on this factor using exactly \
         one of: {labels}. Reply with the label only.",
        option.name,
        join_documents(&option.documents),
        factor.name,
        factor.description
    );
    let req = request(
        prompt,
        &[("task", "score_cell"), ("option", &option.name), ("factor", &factor.name)],
    );
    client.complete(&req)?.parse()
}

/// Rates every option/factor cell with every rater, keeping at most `max_in_flight`
/// requests outstanding. Stops issuing new requests after the first failure.
pub fn score_grid(
    options: &[OptionSpec],
    factors: &[FactorSpec],
    raters: &[&dyn Assessor],
    max_in_flight: usize,
) -> Result<Vec<Assessment>, ScoringError> {
    if raters.is_empty() {
        return Err(ScoringError::NoRatings);
    }
    let jobs: Vec<(usize, usize, usize)> = (0..options.len())
        .flat_map(|i| (0..factors.len()).flat_map(move |j| (0..raters.len()).map(move |r| (i, j, r))))
        .collect();
    let results: Vec<Mutex<Option<OrdinalLevel>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let first_error: Mutex<Option<(usize, ScoringError)>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..max_in_flight.max(1).min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(i, j, r)) = jobs.get(idx) else { break };
                match score_cell(&options[i], &factors[j], raters[r]) {
                    Ok(level) => *results[idx].lock().unwrap() = Some(level),
                    Err(e) => {
                        failed.store(true, Ordering::SeqCst);
                        let mut slot = first_error.lock().unwrap();
                        // Report the earliest failing job for a stable message.
                        if slot.as_ref().is_none_or(|(k, _)| idx < *k) {
                            *slot = Some((idx, e));
                        }
                    }
                }
            });
        }
    });

    if let Some((_, e)) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    let levels: Vec<OrdinalLevel> = results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every job ran"))
        .collect();
    Ok(levels
        .chunks(raters.len())
        .enumerate()
        .map(|(cell, ratings)| Assessment {
            option: cell / factors.len(),
            factor: cell % factors.len(),
            ratings: ratings.to_vec(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{assemble_matrix, LevelScale};

    fn opt(name: &str) -> OptionSpec {
        OptionSpec { name: name.into(), documents: vec![format!("{name} is great")] }
    }

    fn factor(name: &str) -> FactorSpec {
        FactorSpec { name: name.into(), description: String::new() }
    }

    #[test]
    fn extract_passes_list_through() {
        let stub = StubAssessor::fixed(r#"[{"name": "cost", "description": "tuition"}, "location"]"#);
        let f = extract_factors("Which school?", &[], &stub).unwrap();
        assert_eq!(f, vec![
            FactorSpec { name: "cost".into(), description: "tuition".into() },
            factor("location"),
        ]);
        let lines = StubAssessor::fixed("1. cost: tuition\n- location\n\n* safety");
        let f = extract_factors("q", &[], &lines).unwrap();
        assert_eq!(f.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(), ["cost", "location", "safety"]);
    }

    #[test]
    fn extract_rejects_bad_lists() {
        let dup = StubAssessor::fixed(r#"["cost", "Cost"]"#);
        assert!(matches!(extract_factors("q", &[], &dup), Err(ScoringError::DuplicateFactor(_))));
        let empty = StubAssessor::fixed("[]");
        assert!(matches!(extract_factors("q", &[], &empty), Err(ScoringError::EmptyFactorList)));
        let many: Vec<String> = (0..31).map(|i| format!("f{i}")).collect();
        let many = StubAssessor::fixed(serde_json::to_string(&many).unwrap());
        assert!(matches!(extract_factors("q", &[], &many), Err(ScoringError::TooManyFactors(31))));
        let down = StubAssessor::from_fn(|_| Err(ScoringError::Transport("down".into())));
        assert!(matches!(extract_factors("q", &[], &down), Err(ScoringError::Transport(_))));
    }

    #[test]
    fn score_cell_parsing() {
        assert_eq!(score_cell(&opt("a"), &factor("x"), &StubAssessor::fixed("High")).unwrap(), OrdinalLevel::High);
        assert_eq!(
            score_cell(&opt("a"), &factor("x"), &StubAssessor::fixed("very high")).unwrap(),
            OrdinalLevel::VeryHigh
        );
        let err = score_cell(&opt("a"), &factor("x"), &StubAssessor::fixed("7/10")).unwrap_err();
        assert!(matches!(err, ScoringError::UnknownLabel { ref raw } if raw == "7/10"));
    }

    #[test]
    fn replay_matches_metadata() {
        let records = vec![ReplayRecord {
            metadata: [("task", "score_cell"), ("option", "a"), ("factor", "x")]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            response: "Low to Medium".into(),
        }];
        let replay = ReplayAssessor::new(records);
        assert_eq!(score_cell(&opt("a"), &factor("x"), &replay).unwrap(), OrdinalLevel::LowToMedium);
        assert!(matches!(score_cell(&opt("b"), &factor("x"), &replay), Err(ScoringError::Transport(_))));
    }

    #[test]
    fn grid_with_three_raters() {
        let options = [opt("a"), opt("b")];
        let factors = [factor("x"), factor("y"), factor("z")];
        let rater = |bias: usize| {
            StubAssessor::from_fn(move |req| {
                let o = if req.metadata["option"] == "a" { 0 } else { 3 };
                let f = req.metadata["factor"].as_bytes()[0] as usize - b'x' as usize;
                Ok(OrdinalLevel::from_rank((o + f + bias) % 8).unwrap().label().to_string())
            })
        };
        let (r0, r1, r2) = (rater(0), rater(1), rater(4));
        let raters: [&dyn Assessor; 3] = [&r0, &r1, &r2];
        for in_flight in [1, 2, 4, 16] {
            let grid = score_grid(&options, &factors, &raters, in_flight).unwrap();
            assert_eq!(grid.len(), 6);
            let m = assemble_matrix(
                &grid,
                vec!["a".into(), "b".into()],
                vec!["x".into(), "y".into(), "z".into()],
                &LevelScale::default(),
            )
            .unwrap();
            // Cell (a, x): ranks (0, 1, 4) → median 1.
            assert_eq!(m.get(0, 0), 1.0 / 7.0);
            // Cell (b, z): ranks (5, 6, 1) → median 5.
            assert_eq!(m.get(1, 2), 5.0 / 7.0);
        }
    }

    #[test]
    fn grid_reports_failures() {
        let bad = StubAssessor::fixed("excellent");
        let raters: [&dyn Assessor; 1] = [&bad];
        let err = score_grid(&[opt("a")], &[factor("x")], &raters, 4).unwrap_err();
        assert!(matches!(err, ScoringError::UnknownLabel { .. }));
    }
}

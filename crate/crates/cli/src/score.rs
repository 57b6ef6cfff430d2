use std::path::PathBuf;

use clap::Args;
use decisive_core::scoring::{
    extract_factors, score_grid, Assessor, FactorSpec, HttpAssessor, OptionSpec, ReplayAssessor,
    Scenario, ScenarioFile, DEFAULT_MAX_IN_FLIGHT,
};
use serde::Deserialize;

use crate::{positive, CmdResult, Failure};

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Draft with `query`, `options[{name, documents}]` and optional `factors`.
    #[arg(long)]
    input: PathBuf,
    /// Scenario file to write.
    #[arg(long)]
    out: PathBuf,
    /// Recorded assessor responses; repeat once per rater. Without it the HTTP
    /// assessor configured by DECISIVE_ASSESSOR_URL is the single rater.
    #[arg(long)]
    replay: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_IN_FLIGHT, value_parser = positive)]
    max_in_flight: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Draft {
    query: String,
    options: Vec<OptionSpec>,
    #[serde(default)]
    factors: Option<Vec<FactorSpec>>,
}

pub fn run(args: ScoreArgs) -> CmdResult {
    let io_err = |path: &PathBuf, e: &dyn std::fmt::Display| Failure::runtime(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(&args.input).map_err(|e| io_err(&args.input, &e))?;
    let draft: Draft = serde_json::from_str(&text).map_err(|e| io_err(&args.input, &e))?;

    let raters: Vec<Box<dyn Assessor>> = if args.replay.is_empty() {
        vec![Box::new(HttpAssessor::from_env().map_err(Failure::usage)?)]
    } else {
        args.replay
            .iter()
            .map(|p| ReplayAssessor::load(p).map(|r| Box::new(r) as Box<dyn Assessor>).map_err(|e| io_err(p, &e)))
            .collect::<Result<_, _>>()?
    };
    let rater_refs: Vec<&dyn Assessor> = raters.iter().map(|r| r.as_ref()).collect();

    let factors = match draft.factors {
        Some(f) => f,
        None => {
            let documents: Vec<String> = draft.options.iter().flat_map(|o| o.documents.clone()).collect();
            extract_factors(&draft.query, &documents, rater_refs[0]).map_err(Failure::runtime)?
        }
    };
    let grid = score_grid(&draft.options, &factors, &rater_refs, args.max_in_flight).map_err(Failure::runtime)?;

    let mut raw = vec![vec![Vec::new(); factors.len()]; draft.options.len()];
    for cell in grid {
        raw[cell.option][cell.factor] = cell.ratings.iter().map(|l| l.label().to_string()).collect();
    }
    let file = ScenarioFile {
        query: draft.query,
        options: draft.options,
        factors,
        matrix: None,
        raw_assessments: Some(raw),
        ground_truth_prefs: None,
        label_score_map: None,
    };
    let scenario = Scenario::try_from(file.clone()).map_err(Failure::runtime)?;
    let mut json = serde_json::to_string_pretty(&file).map_err(Failure::runtime)?;
    json.push('\n');
    std::fs::write(&args.out, json).map_err(|e| io_err(&args.out, &e))?;
    println!(
        "scored {} options on {} factors with {} rater(s)",
        scenario.matrix.options(),
        scenario.matrix.factors(),
        rater_refs.len()
    );
    Ok(())
}

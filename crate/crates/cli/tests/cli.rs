use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use decisive_core::scoring::Scenario;
use decisive_core::sim::ReportRow;
use decisive_core::{run_trials, ElicitationConfig, ResponderMode, ScenarioSource, TrialConfig};

fn decisive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decisive")).args(args).output().unwrap()
}

fn decisive_with_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_decisive"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "simulate", "--synthetic", "6,5", "--profiles", "80", "--trials", "30", "--seed", "7", "--out",
            out,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for base in [&a, &b] {
        let argv = args(path(base));
        let out = decisive(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for ext in ["json", "csv"] {
        let x = std::fs::read(a.with_extension(ext)).unwrap();
        let y = std::fs::read(b.with_extension(ext)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{ext} reports differ");
    }
    let csv = std::fs::read_to_string(a.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "top1,top2,ndcg3,mrr,avg_questions,trials,seed");
}

#[test]
fn simulate_matches_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("r");
    let out = decisive(&[
        "simulate", "--synthetic", "5,4", "--profiles", "60", "--trials", "25", "--seed", "3", "--kappa", "12",
        "--temperature", "0.05", "--tau", "0.8", "--jobs", "2", "--out", path(&base),
    ]);
    assert!(out.status.success());
    let rows: Vec<ReportRow> = serde_json::from_slice(&std::fs::read(base.with_extension("json")).unwrap()).unwrap();

    let config = TrialConfig {
        source: ScenarioSource::Synthetic { options: 5, factors: 4 },
        trials: 25,
        elicitation: ElicitationConfig { particle_count: 60, kappa: 12.0, tau: 0.8, ..Default::default() },
        responder: ResponderMode::BradleyTerry { temperature: 0.05 },
        base_seed: 3,
        jobs: None,
    };
    assert_eq!(rows, vec![ReportRow::new(&run_trials(&config).unwrap(), 3)]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for metric in ["top1", "top2", "ndcg3", "mrr", "avg_questions"] {
        assert!(stdout.contains(metric));
    }
}

#[test]
fn zero_tau_asks_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("r");
    let out = decisive(&["simulate", "--synthetic", "4,4", "--trials", "5", "--tau", "0", "--out", path(&base)]);
    assert!(out.status.success());
    let rows: Vec<ReportRow> = serde_json::from_slice(&std::fs::read(base.with_extension("json")).unwrap()).unwrap();
    assert_eq!(rows[0].avg_questions, 0.0);
}

#[test]
fn generated_scenarios_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("s1.json");
    let second = dir.path().join("s2.json");
    for p in [&first, &second] {
        assert!(decisive(&["gen-scenario", "--m", "5", "--k", "11", "--seed", "1", "--out", path(p)]).status.success());
    }
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let scenario = Scenario::load(&first).unwrap();
    assert_eq!((scenario.matrix.options(), scenario.matrix.factors()), (5, 11));

    let out = decisive(&["simulate", "--scenario", path(&first), "--trials", "10", "--profiles", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_flags_exit_two() {
    for args in [
        vec!["simulate", "--synthetic", "10,11", "--tau", "1.5"],
        vec!["simulate", "--synthetic", "10"],
        vec!["simulate", "--synthetic", "10,11", "--profiles", "0"],
        vec!["simulate", "--synthetic", "10,11", "--temperature", "-1"],
        vec!["simulate", "--trials", "3"],
        vec!["gen-scenario", "--m", "1", "--k", "4"],
        vec!["frobnicate"],
    ] {
        let out = decisive(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    let out = decisive(&["simulate", "--scenario", "/definitely/missing.json"]);
    assert_eq!(out.status.code(), Some(1));
}

fn write_scenario(dir: &Path, rows: &str, k: usize) -> String {
    let factors: Vec<String> = (0..k).map(|j| format!(r#"{{"name": "f{j}"}}"#)).collect();
    let json = format!(
        r#"{{"query": "pick", "options": [{{"name": "x"}}, {{"name": "y"}}, {{"name": "z"}}], "factors": [{}], "matrix": {rows}}}"#,
        factors.join(",")
    );
    let p = dir.join(format!("k{k}.json"));
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn scripted_sessions_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "[[0.9, 0.1, 0.5], [0.2, 0.8, 0.4], [0.5, 0.5, 0.9]]", 3);
    let script = "b\nwhat?\na\nneutral\nboth\na\n";
    let run = || decisive_with_stdin(&["session", "--scenario", &scenario, "--seed", "4"], script);
    let (first, second) = (run(), run());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("please answer"));
    assert!(text.contains("recommendation"));
}

#[test]
fn eof_aborts_with_prior_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "[[0.9, 0.1, 0.5], [0.2, 0.8, 0.4], [0.5, 0.5, 0.9]]", 3);
    let out = decisive_with_stdin(&["session", "--scenario", &scenario, "--seed", "4"], "");
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("input closed after 0 answers"));
    assert!(text.contains("1. "));
}

#[test]
fn single_factor_needs_no_questions() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "[[0.2], [0.9], [0.5]]", 1);
    let out = decisive_with_stdin(&["session", "--scenario", &scenario, "--seed", "1"], "");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("after 0 questions"));
    assert!(text.contains("1. y"));
}

#[test]
fn score_with_replayed_raters() {
    let dir = tempfile::tempdir().unwrap();
    let draft = dir.path().join("draft.json");
    std::fs::write(
        &draft,
        r#"{"query": "which flat?", "options": [{"name": "north", "documents": ["quiet, far"]}, {"name": "south", "documents": ["loud, close"]}]}"#,
    )
    .unwrap();
    let cells = [("north", "commute"), ("north", "noise"), ("south", "commute"), ("south", "noise")];
    let levels = [["Low", "Medium", "Low"], ["High", "Very High", "High"], ["Very High", "High", "Very High"], ["Very Low", "Low", "Low"]];
    let mut replays = Vec::new();
    for rater in 0..3 {
        let mut records = vec![serde_json::json!({
            "metadata": { "task": "extract_factors" },
            "response": "[\"commute\", \"noise\"]"
        })];
        for ((option, factor), level) in cells.iter().zip(&levels) {
            records.push(serde_json::json!({
                "metadata": { "task": "score_cell", "option": option, "factor": factor },
                "response": level[rater]
            }));
        }
        let p = dir.path().join(format!("rater{rater}.json"));
        std::fs::write(&p, serde_json::to_string(&records).unwrap()).unwrap();
        replays.push(p);
    }
    let out_path = dir.path().join("scenario.json");
    let mut args = vec!["score", "--input", path(&draft), "--out", path(&out_path)];
    for p in &replays {
        args.extend(["--replay", path(p)]);
    }
    let out = decisive(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let scenario = Scenario::load(&out_path).unwrap();
    assert_eq!(scenario.matrix.to_rows(), vec![vec![1.0 / 7.0, 5.0 / 7.0], vec![1.0, 1.0 / 7.0]]);
}

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Args;
use decisive_core::scoring::Scenario;
use decisive_core::sim::{write_report_csv, write_report_json, ReportRow};
use decisive_core::{run_trials, MetricsReport, ResponderMode, ScenarioSource, TrialConfig};

use crate::{positive, positive_real, CmdResult, EngineArgs, Failure};

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["scenario", "synthetic"])))]
pub struct SimulateArgs {
    /// Scenario file used for every trial.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Fresh synthetic M×K scenario per trial, given as `M,K`.
    #[arg(long, value_parser = parse_shape)]
    synthetic: Option<(usize, usize)>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Bradley-Terry temperature; omit for the deterministic responder.
    #[arg(long, value_parser = positive_real)]
    temperature: Option<f64>,
    #[arg(long, default_value_t = 500, value_parser = positive)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads [default: available cores].
    #[arg(long, value_parser = positive)]
    jobs: Option<usize>,
    /// Write `<out>.json` and `<out>.csv` reports.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (m, k) = s.split_once(',').ok_or("expected M,K")?;
    let m: usize = m.trim().parse().map_err(|_| format!("bad option count {m:?}"))?;
    let k: usize = k.trim().parse().map_err(|_| format!("bad factor count {k:?}"))?;
    if m < 2 || k < 2 {
        return Err("M and K must both be at least 2".into());
    }
    Ok((m, k))
}

fn write_reports(base: &Path, rows: &[ReportRow]) -> CmdResult {
    let open = |ext: &str| {
        let path = base.with_extension(ext);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
            .map(|f| (path, f))
    };
    let (path, json) = open("json")?;
    write_report_json(rows, json).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    let (path, csv) = open("csv")?;
    write_report_csv(rows, csv).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn print_summary(config: &TrialConfig, report: &MetricsReport) {
    let source = match &config.source {
        ScenarioSource::Synthetic { options, factors } => format!("synthetic {options}x{factors}"),
        ScenarioSource::Fixed(s) => format!("{}x{} scenario", s.matrix.options(), s.matrix.factors()),
    };
    let responder = match config.responder {
        ResponderMode::Deterministic => "deterministic".to_string(),
        ResponderMode::BradleyTerry { temperature } => format!("bradley-terry T={temperature}"),
    };
    let e = &config.elicitation;
    println!(
        "{source}, {responder}, P={}, tau={}, kappa={}, trials={}, seed={}",
        e.particle_count, e.tau, e.kappa, report.trials, config.base_seed
    );
    println!("{:<14}{:>8}", "metric", "value");
    for (name, value) in [
        ("top1", report.top1),
        ("top2", report.top2),
        ("ndcg3", report.ndcg3),
        ("mrr", report.mrr),
        ("avg_questions", report.avg_questions),
    ] {
        println!("{name:<14}{value:>8.4}");
    }
}

pub fn trial_config(args: &SimulateArgs) -> Result<TrialConfig, Failure> {
    let source = match (&args.scenario, args.synthetic) {
        (Some(path), _) => ScenarioSource::Fixed(
            Scenario::load(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?,
        ),
        (None, Some((options, factors))) => ScenarioSource::Synthetic { options, factors },
        (None, None) => return Err(Failure::usage("give --scenario or --synthetic")),
    };
    let config = TrialConfig {
        source,
        trials: args.trials,
        elicitation: args.engine.config(),
        responder: match args.temperature {
            Some(temperature) => ResponderMode::BradleyTerry { temperature },
            None => ResponderMode::Deterministic,
        },
        base_seed: args.seed,
        jobs: args.jobs,
    };
    config.validate().map_err(Failure::usage)?;
    Ok(config)
}

pub fn run(args: SimulateArgs) -> CmdResult {
    let config = trial_config(&args)?;
    let report = run_trials(&config).map_err(Failure::runtime)?;
    print_summary(&config, &report);
    if let Some(base) = &args.out {
        write_reports(base, &[ReportRow::new(&report, config.base_seed)])?;
    }
    Ok(())
}

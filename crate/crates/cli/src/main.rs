mod score;
mod session;
mod simulate;

use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use decisive_core::elicitation::DEFAULT_KAPPA;
use decisive_core::ElicitationConfig;

#[derive(Parser)]
#[command(name = "decisive", version, about = "Bayesian preference elicitation over an option-scoring matrix")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulated dialogues and report ranking metrics.
    Simulate(simulate::SimulateArgs),
    /// Answer questions interactively on the terminal.
    Session(session::SessionArgs),
    /// Start the HTTP session service.
    Serve(ServeArgs),
    /// Write a synthetic grid-valued scenario.
    GenScenario(GenScenarioArgs),
    /// Build a scenario by rating every option on every factor with assessors.
    Score(score::ScoreArgs),
}

/// Flags that map onto the elicitation config.
#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// Number of preference personas (P).
    #[arg(long, default_value_t = 500, value_parser = positive)]
    profiles: usize,
    /// Confidence threshold on max χ.
    #[arg(long, default_value_t = 0.85, value_parser = unit_interval)]
    tau: f64,
    /// Likelihood sharpness.
    #[arg(long, default_value_t = DEFAULT_KAPPA, value_parser = positive_real)]
    kappa: f64,
    /// Question budget [default: min(20, K(K-1)/2)].
    #[arg(long)]
    max_questions: Option<usize>,
    /// Allow the same pair to be asked more than once.
    #[arg(long)]
    allow_repeats: bool,
}

impl EngineArgs {
    pub fn config(&self) -> ElicitationConfig {
        ElicitationConfig {
            kappa: self.kappa,
            tau: self.tau,
            max_questions: self.max_questions,
            particle_count: self.profiles,
            allow_repeat_questions: self.allow_repeats,
        }
    }
}

#[derive(Args)]
struct ServeArgs {
    /// Bind address.
    #[arg(long, env = decisive_service::ADDR_ENV, default_value = decisive_service::DEFAULT_ADDR)]
    addr: SocketAddr,
    /// Append-only session journal, replayed on start.
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Hours of inactivity before a session is dropped.
    #[arg(long, default_value_t = 24, value_parser = positive)]
    idle_hours: usize,
}

#[derive(Args)]
struct GenScenarioArgs {
    /// Number of options.
    #[arg(long)]
    m: usize,
    /// Number of factors.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl fmt::Display) -> Self {
        Self { code: 2, message: message.to_string() }
    }

    pub fn runtime(message: impl fmt::Display) -> Self {
        Self { code: 1, message: message.to_string() }
    }
}

pub type CmdResult = Result<(), Failure>;

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be a positive number".into())
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in [0, 1]".into())
    }
}

fn gen_scenario(args: GenScenarioArgs) -> CmdResult {
    use rand::SeedableRng;
    let mut rng = decisive_core::ChaCha8Rng::seed_from_u64(args.seed);
    let scenario = decisive_core::generate_synthetic_scenario(args.m, args.k, &mut rng).map_err(Failure::usage)?;
    match args.out {
        Some(path) => scenario
            .save(&path)
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display()))),
        None => {
            println!("{}", scenario.to_json());
            Ok(())
        }
    }
}

fn serve(args: ServeArgs) -> CmdResult {
    use std::sync::Arc;
    use decisive_service::SessionStore;

    let idle = chrono::Duration::hours(args.idle_hours as i64);
    let store = match &args.journal {
        Some(path) => SessionStore::with_journal(path, idle)
            .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?,
        None => SessionStore::in_memory(idle),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::runtime)?;
    runtime
        .block_on(decisive_service::serve(args.addr, Arc::new(store)))
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.addr)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Session(args) => session::run(args),
        Command::Serve(args) => serve(args),
        Command::GenScenario(args) => gen_scenario(args),
        Command::Score(args) => score::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use clap::Args;
use decisive_core::scoring::Scenario;
use decisive_core::{Response, SessionState};
use rand::SeedableRng;

use crate::{CmdResult, EngineArgs, Failure};

#[derive(Args, Debug)]
pub struct SessionArgs {
    /// Scenario file with a scoring matrix.
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Persona seed [default: random, printed at start].
    #[arg(long)]
    seed: Option<u64>,
}

fn print_ranking(state: &SessionState) {
    let rec = state.recommend();
    let labels = state.matrix().option_labels();
    for (pos, &o) in rec.ranking.iter().enumerate() {
        println!("{:>3}. {}  (expected utility {:.4})", pos + 1, labels[o], rec.expected_utilities[o]);
    }
}

pub fn run(args: SessionArgs) -> CmdResult {
    let scenario = Scenario::load(&args.scenario)
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.scenario.display())))?;
    let config = args.engine.config();
    config.validate().map_err(Failure::usage)?;
    let seed = args.seed.unwrap_or_else(rand::random);
    let mut rng = decisive_core::ChaCha8Rng::seed_from_u64(seed);
    let mut state = SessionState::new(scenario.matrix.clone(), config, &mut rng).map_err(Failure::runtime)?;

    if !scenario.query.is_empty() {
        println!("{}", scenario.query);
    }
    println!("seed {seed}; starting confidence {:.4}", state.confidence());

    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let labels = state.matrix().factor_labels().to_vec();
    while state.is_active() {
        let q = state.select_question().expect("active sessions have a question");
        println!(
            "Q{}: which matters more, (a) {} or (b) {}? [a/b/neutral/both]",
            state.questions_asked() + 1,
            labels[q.factor_a()],
            labels[q.factor_b()]
        );
        let response = loop {
            print!("> ");
            io::stdout().flush().map_err(Failure::runtime)?;
            match lines.next() {
                None => {
                    println!();
                    println!("input closed after {} answers; ranking from the current posterior:", state.questions_asked());
                    print_ranking(&state);
                    return Err(Failure::runtime("session aborted: end of input"));
                }
                Some(Err(e)) => return Err(Failure::runtime(e)),
                Some(Ok(line)) => match line.trim().parse::<Response>() {
                    Ok(r) => break r,
                    Err(_) => println!("please answer a, b, neutral or both"),
                },
            }
        };
        let exchange = state.answer(q, response).map_err(Failure::runtime)?;
        println!("confidence {:.4}", exchange.confidence_after);
    }

    let result = state.result();
    let reason = result.stop_reason.map_or("active".into(), |r| r.to_string());
    println!("stopped ({reason}) after {} questions; recommendation:", result.question_count);
    print_ranking(&state);
    Ok(())
}

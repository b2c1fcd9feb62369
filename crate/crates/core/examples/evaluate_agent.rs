//! Evaluate saved agents greedily on remanence scenarios by direct simulation.
//!
//! `cargo run --release --example evaluate_agent -- <config.toml>`

use inrush::harness::{evaluate_agent, evaluation_scenarios, load_agent, RunConfig};
use inrush::rl::{AgentKind, SummaryStats};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let run = match std::env::args().nth(1) {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => RunConfig::default(),
    };
    let scenarios = evaluation_scenarios(&run)?;
    println!("{} scenarios", scenarios.len());
    for kind in AgentKind::ALL {
        let policy = match load_agent(&run, kind) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("{kind}: skipped ({e})");
                continue;
            }
        };
        let eval = evaluate_agent(&run, kind, &policy, &scenarios)?;
        let cells: Vec<String> = SummaryStats::LABELS
            .iter()
            .zip(eval.stats.values())
            .map(|(l, v)| format!("{l} {v:.3}"))
            .collect();
        println!("{kind}: {}", cells.join(", "));
    }
    Ok(())
}

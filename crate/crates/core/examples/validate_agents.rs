//! Compare saved agents with uncontrolled closing at the validation angles.
//!
//! `cargo run --release --example validate_agents -- <config.toml>`

use inrush::harness::{load_agent, validate, RunConfig};
use inrush::rl::AgentKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let run = match std::env::args().nth(1) {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => RunConfig::default(),
    };
    let mut agents = Vec::new();
    for kind in AgentKind::ALL {
        match load_agent(&run, kind) {
            Ok(p) => agents.push((kind.name().to_string(), p)),
            Err(e) => eprintln!("{kind}: skipped ({e})"),
        }
    }
    let report = validate(&run, &agents, None)?;
    report.write_csv(std::io::stdout().lock())?;
    eprintln!("baseline mean {:.3} pu", report.mean.baseline.mean);
    for (name, r) in report.agents.iter().zip(&report.reduction_pct) {
        eprintln!("{name}: reduction {r:.1}%");
    }
    Ok(())
}

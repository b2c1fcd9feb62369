//! Train one agent on the cached table of a run configuration and save the
//! network with its training log.
//!
//! `cargo run --release --example train_agent -- <config.toml> [dqn-linear|dqn-exp|ppo] [iterations]`

use inrush::harness::{build_table, network_path, train_agent, RunConfig};
use inrush::rl::AgentKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let mut run = match args.next() {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => RunConfig::default(),
    };
    let kind: AgentKind = args.next().as_deref().unwrap_or("ppo").parse()?;
    if let Some(t) = args.next() {
        run.rl = run.rl.with_iterations(t.parse()?);
    }
    let (table, _) = build_table(&run, None)?;
    let agent = train_agent(&run, kind, table)?;
    let last = agent.log.last().expect("at least one log row");
    println!(
        "{kind}: trailing mean reward {:.4} at iteration {} -> {}",
        last.mean_reward,
        last.iteration,
        network_path(&run, kind).display()
    );
    Ok(())
}

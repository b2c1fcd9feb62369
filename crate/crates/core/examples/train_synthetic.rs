//! Train every agent on a small matching task with a known optimum.
//!
//! `cargo run --release --example train_synthetic -- [iterations] [seed]`

use inrush::rl::{train, AgentKind, MatchingEnvironment, RlHyperparameters};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let hp = RlHyperparameters::default().with_iterations(iterations);

    for kind in AgentKind::ALL {
        let mut env = MatchingEnvironment::new(8);
        let agent = train(kind, &mut env, &hp, seed)?;
        let rate = env.optimal_rate(|x| agent.policy.greedy_action(x).unwrap_or(usize::MAX));
        println!("{kind}: greedy accuracy {:.1}%", 100.0 * rate);
        for row in agent.log.iter().step_by((agent.log.len() / 5).max(1)) {
            println!("  iter {:6}  reward {:.3}  explore {:.3}", row.iteration, row.mean_reward, row.explore);
        }
    }
    Ok(())
}

//! One episode of the closing-angle decision problem: sample a remanence
//! scenario, then compare a few closing angles by direct simulation.
//!
//! `cargo run --release --example closing_decision -- [seed]`

use inrush::circuit::CircuitConfig;
use inrush::environment::{Backend, InrushEnv, ResetMode};
use inrush::harness::offset_extremes;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let cfg = CircuitConfig::default();
    let env = InrushEnv::new(&cfg, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = env.reset(ResetMode::Evaluation, &mut rng)?;
    println!(
        "opened at {:.1}°, remanent fluxes {:?} Wb, features {:?}",
        state.theta_open, state.fluxes, state.features
    );

    let (best, worst) = offset_extremes(&cfg, state.fluxes);
    for action in [best, worst, 0, 90, 180, 270] {
        let out = env.step(&state, action, Backend::Direct)?;
        println!("close at {action:3}°: i_max {:.3} pu, reward {:+.3}", out.i_max_pu, out.reward);
    }
    Ok(())
}

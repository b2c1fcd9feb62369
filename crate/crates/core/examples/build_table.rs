//! Build (or load from cache) the opening × closing inrush table for a run
//! configuration and report its extremes.
//!
//! `cargo run --release --example build_table -- [config.toml]`

use inrush::environment::{N_ACTIONS, N_OPENINGS};
use inrush::harness::{build_table, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let run = match std::env::args().nth(1) {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => RunConfig::default(),
    };
    let progress = |done: usize, total: usize| {
        if done % 180 == 0 {
            eprintln!("{done}/{total}");
        }
    };
    let (table, summary) = build_table(&run, Some(&progress))?;
    println!(
        "{} ({}) in {:.1} s",
        summary.paths.csv.display(),
        if summary.cache_hit { "cached" } else { "built" },
        summary.elapsed.as_secs_f64()
    );

    let zero = (0..N_OPENINGS).map(|r| table.best_action(r).1).fold(0.0, f64::max);
    println!("worst peak {:.3} pu; largest row minimum {zero:.3} pu", table.max_peak());
    for row in (0..N_OPENINGS).step_by(45) {
        let (b, bp) = table.best_action(row);
        let (w, wp) = table.worst_action(row);
        println!(
            "open {row:3}°: fluxes {:?} Wb, best close {b:3}° ({bp:.3} pu), worst {w:3}° ({wp:.3} pu) of {N_ACTIONS}",
            table.fluxes(row)
        );
    }
    Ok(())
}

//! Draw noisy remanence measurements from the fitted curves, write them in
//! the measurement format and fit sinusoids back to them.
//!
//! `cargo run --example flux_fit -- [n_scenarios] [seed]`

use inrush::flux_data::{
    fit_scenarios, parse_measurements, sample_evaluation_set, write_curves, write_measurements, FittedFluxCurve,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let truth = FittedFluxCurve::measured_set(50.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios = sample_evaluation_set(&truth, n, &mut rng);

    let mut csv = Vec::new();
    write_measurements(&mut csv, &scenarios)?;
    let parsed = parse_measurements(std::str::from_utf8(&csv)?)?;
    let fitted = fit_scenarios(&parsed, 50.0)?;

    write_curves(std::io::stdout().lock(), &fitted)?;
    for (j, (f, t)) in fitted.iter().zip(&truth).enumerate() {
        eprintln!(
            "leg {}: amplitude {:.4} vs {:.4} Wb, phase {:+.4} vs {:+.4} rad, band ±{:.4} Wb",
            j + 1,
            f.amplitude,
            t.amplitude,
            f.phase,
            t.phase,
            f.tolerance
        );
    }
    Ok(())
}

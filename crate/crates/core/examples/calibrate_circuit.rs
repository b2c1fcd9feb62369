//! Run the calibration search from the default circuit and print the
//! annotated configuration.
//!
//! `cargo run --release --example calibrate_circuit > calibrated.toml`

use inrush::harness::{annotate, calibrate, CalibrationTargets, HarnessError, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut run = RunConfig::default();
    let targets = CalibrationTargets::default();
    let report = match calibrate(&run.circuit, &targets) {
        Ok(r) => r,
        Err(HarnessError::CalibrationFailed(best)) => {
            eprintln!("no candidate met every band; best: {best}");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    eprintln!("{report}");
    run.circuit = report.config.clone();
    print!("{}", annotate(&run.to_toml(), &report, &targets));
    Ok(())
}

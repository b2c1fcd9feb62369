//! Open the breaker at a sweep of angles and print the remanent leg fluxes,
//! next to the sinusoids fitted to the laboratory measurements.
//!
//! `cargo run --example remanence -- [step_deg]`

use inrush::circuit::{nominal_peak_flux, CircuitConfig, Deenergizer};
use inrush::flux_data::{fit_sine, fitted_flux, FittedFluxCurve};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let step: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(15);
    let cfg = CircuitConfig::default();
    let phi_nom = nominal_peak_flux(&cfg);
    let measured = FittedFluxCurve::measured_set(cfg.f);
    let opener = Deenergizer::new(&cfg)?;

    println!("theta_open_deg,phi1_wb,phi2_wb,phi3_wb,fit1_wb,fit2_wb,fit3_wb");
    let mut samples: [Vec<(f64, f64)>; 3] = Default::default();
    for theta in (0..360).step_by(step.max(1)) {
        let theta = theta as f64;
        let r = opener.open(theta)?;
        let fit: Vec<f64> = measured.iter().map(|c| fitted_flux(theta, c)).collect();
        println!(
            "{theta},{},{},{},{},{},{}",
            r.fluxes[0], r.fluxes[1], r.fluxes[2], fit[0], fit[1], fit[2]
        );
        for j in 0..3 {
            samples[j].push((theta, r.fluxes[j]));
        }
    }
    for (j, pts) in samples.iter().enumerate() {
        let c = fit_sine(pts, cfg.f)?;
        eprintln!(
            "leg {}: simulated amplitude {:.4} Wb ({:.2} φ_nom), phase {:+.3} rad; measured {:.4} Wb, {:+.3} rad",
            j + 1,
            c.amplitude,
            c.amplitude / phi_nom,
            c.phase,
            measured[j].amplitude,
            measured[j].phase
        );
    }
    Ok(())
}

//! Energize the transformer at a chosen closing angle and write the waveform.
//!
//! `cargo run --example energize -- [theta_close_deg] [phi1,phi2,phi3]`

use inrush::circuit::{prospective_fluxes, steady_state, CircuitConfig, Energizer, Waveform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let theta: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let remanent = match args.next() {
        Some(s) => {
            let v: Vec<f64> = s.split(',').map(str::parse).collect::<Result<_, _>>()?;
            [v[0], v[1], v[2]]
        }
        None => [0.0; 3],
    };
    let cfg = CircuitConfig::default();

    let ss = steady_state(&cfg)?;
    println!(
        "steady state: magnetizing {:.3} A rms ({:.3}% of rated), leg flux peaks {:?} Wb",
        ss.current_rms,
        100.0 * ss.current_rms / cfg.i_rated_primary,
        ss.flux_peak
    );
    println!("prospective fluxes at {theta}°: {:?}", prospective_fluxes(&cfg, theta));

    let mut wf = Waveform::new(cfg.simulation.dt);
    let peak = Energizer::new(&cfg)?.run(remanent, theta, Some(&mut wf))?;
    let path = std::env::temp_dir().join("energize_waveform.csv");
    wf.save_csv(&path)?;
    println!("i_max {peak:.3} pu, {} samples -> {}", wf.len(), path.display());
    Ok(())
}

//! Trace a symmetric major loop of the hysteresis model and print it as CSV.
//!
//! `cargo run --example hysteresis_loop -- [h_max] > loop.csv`

use inrush::jiles_atherton::{loop_energy, trace_field_path, JaModel, JaParameters, LimbState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h_max: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2000.0);
    let params = JaParameters::default();
    let model = JaModel::new(params);

    // initial magnetization curve, then one full cycle to settle, then the recorded cycle
    let settle = trace_field_path(&model, LimbState::demagnetized(), &[h_max, -h_max, h_max], 1.0)?;
    let start = *settle.last().unwrap();
    let cycle = trace_field_path(&model, start, &[-h_max, h_max], 1.0)?;

    println!("h_a_per_m,m_a_per_m,b_t");
    for s in cycle.iter().step_by(20) {
        println!("{},{},{}", s.h, s.m, s.b);
    }
    let b_r = cycle
        .windows(2)
        .find(|w| w[0].h > 0.0 && w[1].h <= 0.0)
        .map(|w| w[1].b)
        .unwrap_or(f64::NAN);
    eprintln!("B_sat {:.3} T, B_r {b_r:.3} T, loop loss {:.2} J/m³", params.b_sat(), loop_energy(&cycle));
    Ok(())
}

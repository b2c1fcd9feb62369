//! Duality-based model of a three-phase, three-legged, two-winding transformer
//! energized from a stiff grid through a three-pole breaker.
//!
//! Topology, primary side only (the secondary is open):
//!
//! ```text
//!  e_a ─ R_g ─ L_g ─ pole A ─┬─ node A ─┐
//!  e_b ─ R_g ─ L_g ─ pole B ─┼─ node B ─┼─ Δ windings (R_HV + L_HL + L_LC + core EMF)
//!  e_c ─ R_g ─ L_g ─ pole C ─┼─ node C ─┘
//!                            └─ C_stray to ground at every node
//! ```
//!
//! Leg 1 carries the A–B winding, leg 2 the C–A winding and leg 3 the B–C
//! winding. The magnetic circuit has three legs and two yokes, each with its
//! own Jiles-Atherton limb, plus zero-sequence air paths of inductance `L0`
//! from the outer-leg joints back to the bottom yoke.

mod config;
mod scenarios;
mod solver;
mod waveform;

use std::f64::consts::PI;

use thiserror::Error;

use crate::jiles_atherton::JaError;

pub use config::{CircuitConfig, GridImpedance, LimbGeometry, SimulationSettings};
pub use scenarios::{
    prospective_fluxes, simulate_deenergization, simulate_energization, steady_state,
    DeenergizationResult, Deenergizer, EnergizationResult, Energizer, SteadyState,
};
pub use solver::{CircuitState, Solver, SourceVoltages};
pub use waveform::{Waveform, WAVEFORM_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("invalid circuit configuration: {0}")]
    InvalidConfig(String),
    #[error("Newton iteration did not converge at t = {t:.6} s after {iterations} iterations (last update {last_update:e})")]
    NoConvergence {
        t: f64,
        iterations: usize,
        last_update: f64,
    },
    #[error("non-finite circuit state at t = {t:.6} s")]
    NonFiniteState { t: f64 },
    #[error("singular Jacobian at t = {t:.6} s")]
    SingularJacobian { t: f64 },
    #[error("core model: {0}")]
    Core(#[from] JaError),
    #[error("invalid angle {0}°")]
    InvalidAngle(f64),
    #[error("remanent flux {flux} Wb exceeds the admissible {limit} Wb")]
    RemanenceOutOfRange { flux: f64, limit: f64 },
    #[error("breaker pole {pole} found no current zero within {window:.3} s of the opening command")]
    PoleNeverOpened { pole: usize, window: f64 },
    #[error("cannot export waveform: {0}")]
    Io(String),
}

/// Peak steady-state leg flux for rated voltage on the Δ-connected primary [Wb].
pub fn nominal_peak_flux(cfg: &CircuitConfig) -> f64 {
    cfg.v_primary * 2f64.sqrt() / (2.0 * PI * cfg.f * cfg.n_turns as f64)
}

/// Peak current base: √2 times the rated rms primary current [A].
pub fn current_base(cfg: &CircuitConfig) -> f64 {
    2f64.sqrt() * cfg.i_rated_primary
}

/// Convert a peak current to per-unit of the rated peak.
pub fn to_pu(i_peak: f64, cfg: &CircuitConfig) -> f64 {
    i_peak / current_base(cfg)
}

/// Cumulative trapezoidal flux from a winding-voltage series: φ[0] = 0 and
/// φ[n] = Σ (v[i-1] + v[i]) dt / (2 N).
pub fn integrate_flux(v: &[f64], dt: f64, n_turns: u32) -> Vec<f64> {
    let n = n_turns as f64;
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    if v.is_empty() {
        return out;
    }
    out.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * dt;
        out.push(acc / n);
    }
    out
}

/// Normalise an angle in degrees to [0, 360).
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_flux_of_the_rated_transformer() {
        let cfg = CircuitConfig::default();
        // 30000·√2 / (2π·50·824) evaluated by hand: 0.163892...
        let phi = nominal_peak_flux(&cfg);
        assert!((phi - 0.1639).abs() < 5e-4, "{phi}");
        assert!((phi - 30000.0 * 2f64.sqrt() / (2.0 * PI * 50.0 * 824.0)).abs() < 1e-15);
    }

    #[test]
    fn nominal_flux_scales_inversely() {
        let cfg = CircuitConfig::default();
        let base = nominal_peak_flux(&cfg);
        let mut c2 = cfg.clone();
        c2.f *= 2.0;
        assert!((nominal_peak_flux(&c2) - base / 2.0).abs() < 1e-15);
        let mut c3 = cfg.clone();
        c3.n_turns *= 2;
        assert!((nominal_peak_flux(&c3) - base / 2.0).abs() < 1e-15);
    }

    #[test]
    fn per_unit_conversion_matches_reported_cases() {
        let cfg = CircuitConfig::default();
        assert!((to_pu(411.0, &cfg) - 2.04).abs() < 0.01);
        assert!((to_pu(56.0, &cfg) - 0.28).abs() < 0.01);
        assert_eq!(to_pu(0.0, &cfg), 0.0);
    }

    #[test]
    fn flux_integral_of_constant_voltage() {
        let v = vec![824.0; 10];
        let phi = integrate_flux(&v, 1e-3, 824);
        assert_eq!(phi.len(), 10);
        assert_eq!(phi[0], 0.0);
        assert!((phi[9] - 0.009).abs() < 1e-15);
    }

    #[test]
    fn flux_integral_of_zero_and_of_whole_periods() {
        assert!(integrate_flux(&[0.0; 7], 1e-4, 10).iter().all(|&x| x == 0.0));
        let dt = 1e-5;
        let v: Vec<f64> = (0..=4000)
            .map(|i| 1000.0 * (2.0 * PI * 50.0 * i as f64 * dt).sin())
            .collect();
        let phi = integrate_flux(&v, dt, 1);
        let peak = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(phi.last().unwrap().abs() < 1e-3 * peak);
    }

    #[test]
    fn degrees_wrap_into_range() {
        assert_eq!(wrap_degrees(360.0), 0.0);
        assert_eq!(wrap_degrees(-90.0), 270.0);
        assert_eq!(wrap_degrees(725.0), 5.0);
    }
}

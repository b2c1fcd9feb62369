use std::io::Write;

use rayon::prelude::*;

use super::train::Policy;
use super::RlError;
use crate::circuit::{nominal_peak_flux, CircuitConfig, Energizer};
use crate::environment::encode;
use crate::flux_data::SwitchingScenario;

pub const RESULTS_HEADER: &str = "theta_open_deg,phi1_wb,phi2_wb,phi3_wb,theta_close_deg,imax_pu";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationRow {
    pub theta_open: f64,
    pub fluxes: [f64; 3],
    pub theta_close: f64,
    pub i_max_pu: f64,
}

/// Box-plot statistics; quartiles interpolate linearly between order statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    pub const LABELS: [&'static str; 6] = ["Mean", "Median", "Q1", "Q3", "Minimum", "Maximum"];

    /// `None` for an empty sample.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: q(0.5),
            q1: q(0.25),
            q3: q(0.75),
            min: v[0],
            max: v[v.len() - 1],
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    pub fn values(&self) -> [f64; 6] {
        [self.mean, self.median, self.q1, self.q3, self.min, self.max]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub rows: Vec<EvaluationRow>,
    pub stats: SummaryStats,
}

/// Greedy closing angle for every scenario, scored by direct simulation.
pub fn evaluate_policy(
    policy: &Policy,
    scenarios: &[SwitchingScenario],
    cfg: &CircuitConfig,
) -> Result<Evaluation, RlError> {
    if scenarios.is_empty() {
        return Err(RlError::EmptyRollout);
    }
    let energizer = Energizer::new(cfg)?;
    let phi_nom = nominal_peak_flux(cfg);
    let rows = scenarios
        .par_iter()
        .map(|s| -> Result<EvaluationRow, RlError> {
            let x = encode(s.theta_open, s.fluxes, phi_nom);
            let action = policy.greedy_action(&x)?;
            let theta_close = action as f64;
            Ok(EvaluationRow {
                theta_open: s.theta_open,
                fluxes: s.fluxes,
                theta_close,
                i_max_pu: energizer.peak(s.fluxes, theta_close)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let peaks: Vec<f64> = rows.iter().map(|r| r.i_max_pu).collect();
    let stats = SummaryStats::from_values(&peaks).expect("non-empty");
    Ok(Evaluation { rows, stats })
}

pub fn write_results<W: Write>(mut w: W, rows: &[EvaluationRow]) -> std::io::Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.theta_open, r.fluxes[0], r.fluxes[1], r.fluxes[2], r.theta_close, r.i_max_pu
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_of_known_sample() {
        let s = SummaryStats::from_values(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!(s.values(), [3.0, 3.0, 2.0, 4.0, 1.0, 5.0]);
        let s = SummaryStats::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        assert!(SummaryStats::from_values(&[]).is_none());
    }

    #[test]
    fn identical_values_have_zero_iqr() {
        let s = SummaryStats::from_values(&[0.42; 48]).unwrap();
        assert_eq!(s.iqr(), 0.0);
        assert_eq!(s.min, s.max);
    }
}

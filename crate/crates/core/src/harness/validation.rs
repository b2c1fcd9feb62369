use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use super::pipelines::{rng_for, stream};
use super::{HarnessError, RunConfig};
use crate::circuit::{nominal_peak_flux, Energizer};
use crate::environment::encode;
use crate::flux_data::{sample_scenario, FittedFluxCurve};
use crate::rl::{Policy, SummaryStats};

pub const BASELINE_HEADER: &str = "theta_open_deg,imax_pu";

/// Mean, minimum and maximum of a set of peaks [pu].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats3 {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats3 {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn average(items: &[Stats3]) -> Self {
        let n = items.len() as f64;
        Self {
            mean: items.iter().map(|s| s.mean).sum::<f64>() / n,
            min: items.iter().map(|s| s.min).sum::<f64>() / n,
            max: items.iter().map(|s| s.max).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub theta_open: f64,
    pub baseline: Stats3,
    pub agents: Vec<Stats3>,
}

/// Per-opening-angle comparison of uncontrolled closing against the agents.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub agents: Vec<String>,
    pub rows: Vec<ValidationRow>,
    /// Column-wise average of the rows.
    pub mean: ValidationRow,
    /// `100·(1 − agent mean / baseline mean)` per agent.
    pub reduction_pct: Vec<f64>,
}

impl ValidationReport {
    pub fn from_rows(agents: Vec<String>, rows: Vec<ValidationRow>) -> Self {
        assert!(!rows.is_empty());
        let baselines: Vec<Stats3> = rows.iter().map(|r| r.baseline).collect();
        let baseline = Stats3::average(&baselines);
        let agent_means: Vec<Stats3> = (0..agents.len())
            .map(|k| Stats3::average(&rows.iter().map(|r| r.agents[k]).collect::<Vec<_>>()))
            .collect();
        let reduction_pct = agent_means
            .iter()
            .map(|a| 100.0 * (1.0 - a.mean / baseline.mean))
            .collect();
        Self {
            agents,
            rows,
            mean: ValidationRow {
                theta_open: f64::NAN,
                baseline,
                agents: agent_means,
            },
            reduction_pct,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("theta_open_deg,baseline_mean,baseline_min,baseline_max");
        for a in &self.agents {
            header.push_str(&format!(",{a}_mean,{a}_min,{a}_max"));
        }
        writeln!(w, "{header}")?;
        let line = |label: String, r: &ValidationRow| {
            let mut s = format!("{label},{},{},{}", r.baseline.mean, r.baseline.min, r.baseline.max);
            for a in &r.agents {
                s.push_str(&format!(",{},{},{}", a.mean, a.min, a.max));
            }
            s
        };
        for r in &self.rows {
            writeln!(w, "{}", line(r.theta_open.to_string(), r))?;
        }
        writeln!(w, "{}", line("Mean".into(), &self.mean))?;
        let mut s = String::from("reduction_pct,,,");
        for r in &self.reduction_pct {
            s.push_str(&format!(",{r},,"));
        }
        writeln!(w, "{s}")
    }
}

/// Measured uncontrolled closings, `theta_open_deg,imax_pu` per line.
pub fn load_baseline(path: &Path) -> Result<Vec<(f64, f64)>, HarnessError> {
    let bad = |message: String| HarnessError::Input {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line == BASELINE_HEADER) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        match parts[..] {
            [a, b] => match (parse(a), parse(b)) {
                (Some(a), Some(b)) if b >= 0.0 => out.push((a, b)),
                _ => return Err(bad(format!("line {}: invalid values `{line}`", i + 1))),
            },
            _ => return Err(bad(format!("line {}: expected 2 columns", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(bad("no baseline rows".into()));
    }
    Ok(out)
}

/// Score every agent at the validation opening angles against uncontrolled
/// closing. Each angle gets `draws_per_angle` remanence draws from the fitted
/// curves; the baseline closes each draw at a uniformly random angle unless
/// measured baseline rows are supplied.
pub fn validate(
    run: &RunConfig,
    agents: &[(String, Policy)],
    measured_baseline: Option<&[(f64, f64)]>,
) -> Result<ValidationReport, HarnessError> {
    let cfg = &run.circuit;
    let curves = FittedFluxCurve::measured_set(cfg.f);
    let phi_nom = nominal_peak_flux(cfg);
    let mut rng = rng_for(run.seed, stream::VALIDATION);

    let measured: Option<BTreeMap<i64, Vec<f64>>> = measured_baseline.map(|rows| {
        let mut m: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
        for &(theta, i) in rows {
            m.entry((theta * 1e6).round() as i64).or_default().push(i);
        }
        m
    });
    let angles: Vec<f64> = match &measured {
        Some(m) => m.keys().map(|&k| k as f64 / 1e6).collect(),
        None => run.evaluation.validation_angles.clone(),
    };

    // (fluxes, closing angle), angle by angle and draw by draw, baseline first
    let n_draws = run.evaluation.draws_per_angle;
    let mut jobs: Vec<([f64; 3], f64)> = Vec::new();
    for &theta in &angles {
        for _ in 0..n_draws {
            let s = sample_scenario(theta, &curves, &mut rng);
            let random_close: f64 = rng.random_range(0.0..360.0);
            if measured.is_none() {
                jobs.push((s.fluxes, random_close));
            }
            let x = encode(s.theta_open, s.fluxes, phi_nom);
            for (_, policy) in agents {
                jobs.push((s.fluxes, policy.greedy_action(&x)? as f64));
            }
        }
    }

    let energizer = Energizer::new(cfg)?;
    let peaks = jobs
        .par_iter()
        .map(|&(fluxes, c)| energizer.peak(fluxes, c))
        .collect::<Result<Vec<f64>, _>>()?;

    let mut it = peaks.into_iter();
    let mut rows = Vec::with_capacity(angles.len());
    for &theta in &angles {
        let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n_draws); agents.len() + 1];
        for _ in 0..n_draws {
            let first = if measured.is_none() { 0 } else { 1 };
            for col in cols.iter_mut().skip(first) {
                col.push(it.next().expect("one peak per job"));
            }
        }
        let baseline = match &measured {
            Some(m) => Stats3::of(&m[&((theta * 1e6).round() as i64)]),
            None => Stats3::of(&cols[0]),
        };
        rows.push(ValidationRow {
            theta_open: theta,
            baseline,
            agents: cols[1..].iter().map(|c| Stats3::of(c)).collect(),
        });
    }
    Ok(ValidationReport::from_rows(
        agents.iter().map(|(n, _)| n.clone()).collect(),
        rows,
    ))
}

/// `statistic,imax_pu` with the six box-plot rows.
pub fn write_summary<W: Write>(mut w: W, stats: &SummaryStats) -> std::io::Result<()> {
    writeln!(w, "statistic,imax_pu")?;
    for (label, v) in SummaryStats::LABELS.iter().zip(stats.values()) {
        writeln!(w, "{label},{v}")?;
    }
    Ok(())
}

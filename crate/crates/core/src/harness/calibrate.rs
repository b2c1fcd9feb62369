use std::fmt;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::circuit::{prospective_fluxes, steady_state, CircuitConfig, Deenergizer, Energizer};
use crate::environment::N_ACTIONS;

/// Bands the calibrated circuit must meet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationTargets {
    /// Worst peak over the probed table rows [pu].
    pub worst_peak_pu: [f64; 2],
    /// Steady magnetizing rms current, percent of rated.
    pub magnetizing_rms_pct: [f64; 2],
    /// Lower bound on worst / best closing peak at zero remanence.
    pub zero_remanence_ratio: f64,
    /// Upper bound on every probed row's best closing peak [pu].
    pub row_minimum_pu: f64,
    /// Largest remanent leg flux over the probed rows [φ_nom].
    pub remanence_pu: [f64; 2],
    /// Relative safety margin applied inside every band.
    pub margin: f64,
    /// Simulation budget of the search.
    pub max_simulations: usize,
    /// Opening angles whose remanence is probed [deg].
    pub opening_angles: Vec<f64>,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            worst_peak_pu: [1.5, 3.0],
            magnetizing_rms_pct: [0.1, 2.0],
            zero_remanence_ratio: 5.0,
            row_minimum_pu: 1.0,
            remanence_pu: [0.3, 0.8],
            margin: 0.1,
            max_simulations: 200,
            opening_angles: vec![30.0, 90.0, 150.0],
        }
    }
}

impl CalibrationTargets {
    /// Simulations spent on one candidate.
    pub fn cost_per_candidate(&self) -> usize {
        // warm-up, two zero-remanence closings, then one opening and two closings per angle
        1 + 2 + 3 * self.opening_angles.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationMetrics {
    pub worst_peak_pu: f64,
    /// Largest best-closing peak over the probed rows.
    pub row_minimum_pu: f64,
    pub zero_best_pu: f64,
    pub zero_worst_pu: f64,
    pub magnetizing_rms_pct: f64,
    /// Largest |remanent flux| over the probed rows, per unit of φ_nom.
    pub remanence_pu: f64,
}

impl CalibrationMetrics {
    pub fn zero_remanence_ratio(&self) -> f64 {
        self.zero_worst_pu / self.zero_best_pu
    }

    /// Summed log-distance outside the bands; zero when all hold. The probes
    /// see a subset of the table, so the maxima they report must clear their
    /// upper bounds by the margin.
    pub fn violation(&self, t: &CalibrationTargets) -> f64 {
        let m = 1.0 + t.margin;
        let above = |x: f64, hi: f64| (x / hi).ln().max(0.0);
        let below = |x: f64, lo: f64| (lo / x).ln().max(0.0);
        below(self.worst_peak_pu, t.worst_peak_pu[0])
            + above(self.worst_peak_pu * m, t.worst_peak_pu[1])
            + below(self.magnetizing_rms_pct, t.magnetizing_rms_pct[0])
            + above(self.magnetizing_rms_pct, t.magnetizing_rms_pct[1])
            + below(self.zero_remanence_ratio(), t.zero_remanence_ratio)
            + above(self.row_minimum_pu * m, t.row_minimum_pu)
            + below(self.remanence_pu, t.remanence_pu[0])
            + above(self.remanence_pu * m, t.remanence_pu[1])
    }
}

impl fmt::Display for CalibrationMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "worst {:.3} pu, row minimum {:.3} pu, zero-remanence {:.3}/{:.3} pu (ratio {:.1}), magnetizing {:.3}% rms, remanence {:.3} φ_nom",
            self.worst_peak_pu,
            self.row_minimum_pu,
            self.zero_worst_pu,
            self.zero_best_pu,
            self.zero_remanence_ratio(),
            self.magnetizing_rms_pct,
            self.remanence_pu
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub config: CircuitConfig,
    pub metrics: CalibrationMetrics,
    pub violation: f64,
    pub simulations: usize,
    pub candidates: usize,
    /// Leg and yoke area relative to the starting configuration.
    pub area_scale: f64,
}

impl fmt::Display for CalibrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after {} candidates / {} simulations (area ×{:.4}, a {:.4}, k {:.4}, c {:.4}, grid L {:.4e} H)",
            self.metrics,
            self.candidates,
            self.simulations,
            self.area_scale,
            self.config.core.a,
            self.config.core.k,
            self.config.core.c,
            self.config.grid.l
        )
    }
}

/// Largest per-leg flux offset between `remanent` and the prospective flux at `theta`.
fn offset(cfg: &CircuitConfig, remanent: [f64; 3], theta: f64) -> f64 {
    let p = prospective_fluxes(cfg, theta);
    (0..3).map(|j| (remanent[j] - p[j]).abs()).fold(0.0, f64::max)
}

/// Closing angles on the action grid with the smallest and largest flux offset.
pub fn offset_extremes(cfg: &CircuitConfig, remanent: [f64; 3]) -> (usize, usize) {
    let d: Vec<f64> = (0..N_ACTIONS).map(|c| offset(cfg, remanent, c as f64)).collect();
    let best = (0..N_ACTIONS).fold(0, |b, c| if d[c] < d[b] { c } else { b });
    let worst = (0..N_ACTIONS).fold(0, |w, c| if d[c] > d[w] { c } else { w });
    (best, worst)
}

/// Probe a configuration. Closing angles come from the flux-offset heuristic,
/// so each probed row costs one opening and two closings.
pub fn assess(cfg: &CircuitConfig, targets: &CalibrationTargets) -> Result<CalibrationMetrics, HarnessError> {
    cfg.validate()?;
    let ss = steady_state(cfg)?;
    let magnetizing_rms_pct = 100.0 * ss.current_rms / cfg.i_rated_primary;
    let energizer = Energizer::new(cfg)?;
    let (zb, zw) = offset_extremes(cfg, [0.0; 3]);
    let zero_best_pu = energizer.peak([0.0; 3], zb as f64)?;
    let zero_worst_pu = energizer.peak([0.0; 3], zw as f64)?;

    let deenergizer = Deenergizer::new(cfg)?;
    let phi_nom = crate::circuit::nominal_peak_flux(cfg);
    let (mut worst, mut row_min, mut rem) = (0.0f64, 0.0f64, 0.0f64);
    for &theta in &targets.opening_angles {
        let r = deenergizer.open(theta)?.fluxes;
        rem = r.iter().fold(rem, |m, x| m.max(x.abs() / phi_nom));
        let (b, w) = offset_extremes(cfg, r);
        row_min = row_min.max(energizer.peak(r, b as f64)?);
        worst = worst.max(energizer.peak(r, w as f64)?);
    }
    Ok(CalibrationMetrics {
        worst_peak_pu: worst,
        row_minimum_pu: row_min,
        zero_best_pu,
        zero_worst_pu,
        magnetizing_rms_pct,
        remanence_pu: rem,
    })
}

#[derive(Debug, Clone, Copy)]
enum Knob {
    Area,
    K,
    GridL,
    A,
    C,
}

const KNOBS: [Knob; 5] = [Knob::Area, Knob::A, Knob::K, Knob::C, Knob::GridL];

fn initial_factor(k: Knob) -> f64 {
    match k {
        Knob::Area => 1.25,
        Knob::K => 2.0,
        Knob::GridL => 2.0,
        Knob::A => 1.5,
        Knob::C => 1.5,
    }
}

fn apply(cfg: &CircuitConfig, knob: Knob, factor: f64) -> Option<CircuitConfig> {
    let mut c = cfg.clone();
    match knob {
        Knob::Area => {
            c.leg.area *= factor;
            c.yoke.area *= factor;
        }
        Knob::K => c.core.k *= factor,
        Knob::GridL => c.grid.l *= factor,
        Knob::A => c.core.a *= factor,
        Knob::C => {
            c.core.c *= factor;
            if c.core.c >= 1.0 {
                return None;
            }
        }
    }
    c.validate().ok().map(|_| c)
}

/// Multiplicative coordinate search over leg/yoke area, JA k, grid inductance,
/// JA a and JA c. A configuration that already meets the bands is returned
/// unchanged.
pub fn calibrate(start: &CircuitConfig, targets: &CalibrationTargets) -> Result<CalibrationReport, HarnessError> {
    let cost = targets.cost_per_candidate();
    let area0 = start.leg.area;
    let mut sims = cost;
    let mut candidates = 1;
    let metrics = assess(start, targets)?;
    let mut best = CalibrationReport {
        config: start.clone(),
        violation: metrics.violation(targets),
        metrics,
        simulations: sims,
        candidates,
        area_scale: 1.0,
    };
    log::info!("start: {}", best.metrics);
    if best.violation == 0.0 {
        return Ok(best);
    }

    let mut factors: Vec<f64> = KNOBS.iter().map(|&k| initial_factor(k)).collect();
    // Evaluates one move from the current best and returns the candidate's
    // violation (infinite when it could not be simulated). The move is taken
    // when it cuts the violation below `keep` times the best.
    let try_move = |best: &mut CalibrationReport,
                    knob: Knob,
                    factor: f64,
                    keep: f64,
                    sims: &mut usize,
                    candidates: &mut usize|
     -> (bool, f64) {
        if *sims + cost > targets.max_simulations {
            return (false, f64::INFINITY);
        }
        let Some(cfg) = apply(&best.config, knob, factor) else {
            return (false, f64::INFINITY);
        };
        *sims += cost;
        *candidates += 1;
        let m = match assess(&cfg, targets) {
            Ok(m) => m,
            Err(e) => {
                log::warn!("candidate {candidates} rejected: {e}");
                return (false, f64::INFINITY);
            }
        };
        let v = m.violation(targets);
        log::info!("candidate {candidates} ({knob:?} ×{factor:.3}): violation {v:.4}; {m}");
        if v >= best.violation * keep {
            return (false, v);
        }
        *best = CalibrationReport {
            area_scale: cfg.leg.area / area0,
            config: cfg,
            metrics: m,
            violation: v,
            simulations: *sims,
            candidates: *candidates,
        };
        (true, v)
    };
    while sims + cost <= targets.max_simulations && best.violation > 0.0 {
        let mut improved = false;
        for (i, &knob) in KNOBS.iter().enumerate() {
            let f = factors[i];
            let (up, v_up) = try_move(&mut best, knob, f, 1.0, &mut sims, &mut candidates);
            let (down, v_down) = if up {
                (false, f64::INFINITY)
            } else {
                try_move(&mut best, knob, 1.0 / f, 1.0, &mut sims, &mut candidates)
            };
            if up || down {
                improved = true;
                let step = if up { f } else { 1.0 / f };
                // keep going while the same move pays off, then try half a step either way
                while best.violation > 0.0 && try_move(&mut best, knob, step, 0.9, &mut sims, &mut candidates).0 {}
                let half = step.sqrt();
                if best.violation > 0.0 && !try_move(&mut best, knob, 1.0 / half, 1.0, &mut sims, &mut candidates).0 {
                    try_move(&mut best, knob, half, 1.0, &mut sims, &mut candidates);
                }
            } else if v_up.min(v_down).is_finite() {
                // both full steps overshoot; a half step toward the better side may not
                let half = if v_up <= v_down { f.sqrt() } else { 1.0 / f.sqrt() };
                improved |= try_move(&mut best, knob, half, 1.0, &mut sims, &mut candidates).0;
            }
            if best.violation == 0.0 {
                return Ok(best);
            }
        }
        if !improved {
            for f in &mut factors {
                *f = f.sqrt();
            }
            if factors.iter().all(|&f| f < 1.01) {
                break;
            }
        }
    }
    best.simulations = sims;
    best.candidates = candidates;
    Err(HarnessError::CalibrationFailed(Box::new(best)))
}

/// TOML for `cfg` preceded by comment lines recording how it was obtained.
pub fn annotate(toml_text: &str, report: &CalibrationReport, targets: &CalibrationTargets) -> String {
    let mut out = String::new();
    out.push_str("# Calibrated circuit parameters.\n");
    out.push_str(&format!(
        "# targets: worst peak {:?} pu, magnetizing {:?} % rms, zero-remanence ratio >= {}, row minimum < {} pu, remanence {:?} phi_nom, margin {}\n",
        targets.worst_peak_pu,
        targets.magnetizing_rms_pct,
        targets.zero_remanence_ratio,
        targets.row_minimum_pu,
        targets.remanence_pu,
        targets.margin
    ));
    out.push_str(&format!("# probes at opening angles {:?} deg\n", targets.opening_angles));
    out.push_str(&format!("# result: {report}\n\n"));
    out.push_str(toml_text);
    out
}

//! Jiles-Atherton hysteresis for a single core limb.
//!
//! The model is the direct (field-driven) differential form
//!
//! ```text
//! dM/dH = (1 - c) δ_M (M_an - M) / (δ k - α (M_an - M)) + c dM_an/dH
//! ```
//!
//! with `M_an` the Langevin anhysteretic evaluated at the effective field
//! `H_e = H + α M`, `δ = sign(dH)` and `δ_M` suppressing the irreversible term
//! when it would produce a negative susceptibility. Large field increments are
//! split into sub-steps of at most [`JaModel::max_substep`] (optionally growing
//! in proportion to |H| deep in saturation) and integrated with Heun's method.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vacuum permeability [H/m].
pub const MU0: f64 = 4.0e-7 * PI;

/// Below this |H_e/a| the Langevin function is replaced by its linear term.
const LANGEVIN_SERIES_LIMIT: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JaError {
    #[error("invalid Jiles-Atherton parameters: {0}")]
    InvalidParameters(String),
    #[error("non-finite limb state (h = {h}, m = {m})")]
    NonFiniteState { h: f64, m: f64 },
    #[error("flux-density solve did not converge after {iterations} iterations (|ΔB| = {residual:e} T)")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("target flux density {b_target} T is outside the reachable range ±{limit} T")]
    OutOfRange { b_target: f64, limit: f64 },
}

/// The five material constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JaParameters {
    /// Saturation magnetization [A/m].
    pub m_s: f64,
    /// Anhysteretic shape constant [A/m].
    pub a: f64,
    /// Inter-domain coupling.
    pub alpha: f64,
    /// Pinning constant [A/m].
    pub k: f64,
    /// Reversibility, 0..=1.
    pub c: f64,
}

impl Default for JaParameters {
    /// Grain-oriented steel starting point (M120-27S-like), meant to be calibrated.
    fn default() -> Self {
        Self {
            m_s: 1.38e6,
            a: 15.0,
            alpha: 2e-5,
            k: 30.0,
            c: 0.25,
        }
    }
}

impl JaParameters {
    pub fn validate(&self) -> Result<(), JaError> {
        let all = [self.m_s, self.a, self.alpha, self.k, self.c];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(JaError::InvalidParameters("non-finite value".into()));
        }
        if self.m_s <= 0.0 {
            return Err(JaError::InvalidParameters(format!("m_s = {} must be > 0", self.m_s)));
        }
        if self.a <= 0.0 {
            return Err(JaError::InvalidParameters(format!("a = {} must be > 0", self.a)));
        }
        if self.k <= 0.0 {
            return Err(JaError::InvalidParameters(format!("k = {} must be > 0", self.k)));
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(JaError::InvalidParameters(format!("c = {} must lie in [0, 1]", self.c)));
        }
        if self.alpha < 0.0 {
            return Err(JaError::InvalidParameters(format!("alpha = {} must be >= 0", self.alpha)));
        }
        Ok(())
    }

    /// Saturation flux density μ0·m_s [T].
    pub fn b_sat(&self) -> f64 {
        MU0 * self.m_s
    }
}

/// Field, magnetization and flux density of one limb.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LimbState {
    /// Magnetic field [A/m].
    pub h: f64,
    /// Magnetization [A/m].
    pub m: f64,
    /// Flux density [T].
    pub b: f64,
}

impl LimbState {
    pub fn demagnetized() -> Self {
        Self::default()
    }

    pub fn from_hm(h: f64, m: f64) -> Self {
        Self { h, m, b: MU0 * (h + m) }
    }

    /// Remanent state: H = 0 with the magnetization carrying the whole flux density.
    pub fn remanent(b: f64, p: &JaParameters) -> Result<Self, JaError> {
        let m = b / MU0;
        if !m.is_finite() {
            return Err(JaError::NonFiniteState { h: 0.0, m });
        }
        if m.abs() >= p.m_s {
            return Err(JaError::OutOfRange { b_target: b, limit: p.b_sat() });
        }
        Ok(Self::from_hm(0.0, m))
    }

    fn is_finite(&self) -> bool {
        self.h.is_finite() && self.m.is_finite() && self.b.is_finite()
    }
}

/// Langevin function L(x) = coth(x) - 1/x.
fn langevin(x: f64) -> f64 {
    if x.abs() < LANGEVIN_SERIES_LIMIT {
        x / 3.0
    } else {
        1.0 / x.tanh() - 1.0 / x
    }
}

/// dL/dx, with a series near zero where the closed form cancels badly.
fn langevin_slope(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 / 3.0 - x2 / 15.0 + 2.0 * x2 * x2 / 189.0
    } else {
        let s = x.sinh();
        1.0 / (x * x) - 1.0 / (s * s)
    }
}

/// Anhysteretic magnetization at effective field `h_e` [A/m].
pub fn anhysteretic(h_e: f64, p: &JaParameters) -> f64 {
    p.m_s * langevin(h_e / p.a)
}

/// dM_an/dH_e [dimensionless].
pub fn anhysteretic_slope(h_e: f64, p: &JaParameters) -> f64 {
    p.m_s / p.a * langevin_slope(h_e / p.a)
}

/// Differential susceptibility dM/dH for a field moving in direction `delta` (±1).
pub fn susceptibility(h: f64, m: f64, delta: f64, p: &JaParameters) -> f64 {
    let h_e = h + p.alpha * m;
    let m_an = anhysteretic(h_e, p);
    let gap = m_an - m;
    let irreversible = if gap * delta < 0.0 {
        0.0
    } else {
        let denom = delta * p.k - p.alpha * gap;
        let v = gap / denom;
        if v > 0.0 && v.is_finite() {
            v
        } else {
            0.0
        }
    };
    (1.0 - p.c) * irreversible + p.c * anhysteretic_slope(h_e, p)
}

/// A parameter set together with its sub-stepping policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JaModel {
    pub params: JaParameters,
    /// Largest field increment integrated in one sub-step [A/m].
    pub max_substep: f64,
    /// Sub-steps may grow to this fraction of |H| when that exceeds `max_substep`.
    pub relative_substep: f64,
}

/// Result of advancing a limb: the new state and dB/dH at the end point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JaStep {
    pub state: LimbState,
    /// Differential permeability dB/dH at the new state [H/m].
    pub db_dh: f64,
}

impl JaModel {
    pub const DEFAULT_MAX_SUBSTEP: f64 = 1.0;

    pub fn new(params: JaParameters) -> Self {
        Self {
            params,
            max_substep: Self::DEFAULT_MAX_SUBSTEP,
            relative_substep: 0.0,
        }
    }

    pub fn with_relative_substep(mut self, fraction: f64) -> Self {
        self.relative_substep = fraction;
        self
    }

    fn substep_at(&self, h: f64) -> f64 {
        self.max_substep.max(self.relative_substep * h.abs())
    }

    pub fn with_max_substep(mut self, max_substep: f64) -> Self {
        self.max_substep = max_substep;
        self
    }

    /// Number of sub-steps the default policy uses for an increment `dh`.
    pub fn substeps_for(&self, dh: f64) -> usize {
        ((dh.abs() / self.max_substep).ceil() as usize).max(1)
    }

    /// Advance by `dh` on a sub-step grid anchored at `state.h`; only the last
    /// sub-step is shortened, so the result is continuous in `dh`.
    pub fn step(&self, state: LimbState, dh: f64) -> Result<JaStep, JaError> {
        let p = &self.params;
        if dh == 0.0 {
            return self.step_n(state, 0.0, 1);
        }
        if !(dh.is_finite() && state.is_finite()) {
            return Err(JaError::NonFiniteState { h: state.h + dh, m: state.m });
        }
        let delta = dh.signum();
        let target = state.h + dh;
        let m_cap = p.m_s * (1.0 - 1e-12);
        let mut h = state.h;
        let mut m = state.m;
        loop {
            let size = self.substep_at(h);
            let mut h_next = if (target - h).abs() <= size { target } else { h + delta * size };
            if h_next == h {
                h_next = target;
            }
            let step = h_next - h;
            let k1 = susceptibility(h, m, delta, p);
            let m_pred = (m + step * k1).clamp(-m_cap, m_cap);
            let k2 = susceptibility(h_next, m_pred, delta, p);
            m = (m + 0.5 * step * (k1 + k2)).clamp(-m_cap, m_cap);
            h = h_next;
            if h == target {
                break;
            }
        }
        let out = LimbState::from_hm(h, m);
        if !out.is_finite() {
            return Err(JaError::NonFiniteState { h, m });
        }
        Ok(JaStep {
            state: out,
            db_dh: MU0 * (1.0 + susceptibility(h, m, delta, p)),
        })
    }

    /// Advance by `dh` using exactly `n` equal sub-steps.
    ///
    /// With `n` held fixed the result is a smooth function of `dh` (apart from
    /// the reversal at `dh = 0`), which is what a Newton iteration needs.
    pub fn step_n(&self, state: LimbState, dh: f64, n: usize) -> Result<JaStep, JaError> {
        let p = &self.params;
        if dh == 0.0 {
            let delta = 1.0;
            let chi = susceptibility(state.h, state.m, delta, p);
            return Ok(JaStep {
                state,
                db_dh: MU0 * (1.0 + chi),
            });
        }
        let delta = dh.signum();
        let n = n.max(1);
        let sub = dh / n as f64;
        let m_cap = p.m_s * (1.0 - 1e-12);
        let mut h = state.h;
        let mut m = state.m;
        for i in 0..n {
            let k1 = susceptibility(h, m, delta, p);
            // final sub-step lands exactly on state.h + dh
            let h_next = if i + 1 == n { state.h + dh } else { h + sub };
            let step = h_next - h;
            let m_pred = (m + step * k1).clamp(-m_cap, m_cap);
            let k2 = susceptibility(h_next, m_pred, delta, p);
            m = (m + 0.5 * step * (k1 + k2)).clamp(-m_cap, m_cap);
            h = h_next;
        }
        let out = LimbState::from_hm(h, m);
        if !out.is_finite() {
            return Err(JaError::NonFiniteState { h, m });
        }
        let chi = susceptibility(h, m, delta, p);
        Ok(JaStep {
            state: out,
            db_dh: MU0 * (1.0 + chi),
        })
    }

    /// Find the field that brings the limb to `b_target` by a monotone excursion
    /// from `state`. The result satisfies `|b - b_target| <= tol * max(|b_target|, 0.1 T)`.
    pub fn inverse_step_to_b(
        &self,
        state: LimbState,
        b_target: f64,
        tol: f64,
    ) -> Result<LimbState, JaError> {
        self.inverse_step_to_b_with(state, b_target, tol, InverseOptions::default())
    }

    pub fn inverse_step_to_b_with(
        &self,
        state: LimbState,
        b_target: f64,
        tol: f64,
        opts: InverseOptions,
    ) -> Result<LimbState, JaError> {
        let limit = MU0 * (opts.h_max + self.params.m_s);
        if !b_target.is_finite() || b_target.abs() >= limit {
            return Err(JaError::OutOfRange { b_target, limit });
        }
        let scale = b_target.abs().max(0.1);
        let accept = tol * scale;
        if (state.b - b_target).abs() <= accept {
            return Ok(state);
        }

        let dir = (b_target - state.b).signum();
        let eval = |dh: f64| -> Result<JaStep, JaError> { self.step(state, dh) };

        // Bracket the root along the excursion direction.
        let mut lo = 0.0_f64;
        let mut hi;
        let start_slope = MU0 * (1.0 + susceptibility(state.h, state.m, dir, &self.params));
        let mut trial = dir * ((b_target - state.b).abs() / start_slope).max(1e-6);
        let mut iterations = 0;
        loop {
            iterations += 1;
            let s = eval(trial)?;
            let f = s.state.b - b_target;
            if (f.abs()) <= accept {
                return Ok(s.state);
            }
            if f * dir > 0.0 {
                hi = trial;
                break;
            }
            lo = trial;
            trial *= 2.0;
            if trial.abs() > opts.h_max * 2.0 || iterations >= opts.max_iterations {
                return Err(JaError::NoConvergence {
                    iterations,
                    residual: f.abs(),
                });
            }
        }

        // Safeguarded Newton inside [lo, hi] (both expressed as dh from `state`).
        let mut x = 0.5 * (lo + hi);
        let mut last = f64::INFINITY;
        while iterations < opts.max_iterations {
            iterations += 1;
            let s = eval(x)?;
            let f = s.state.b - b_target;
            last = f.abs();
            if last <= accept {
                return Ok(s.state);
            }
            if f * dir > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - f / s.db_dh;
            let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
            x = if newton > a && newton < b {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(JaError::NoConvergence {
            iterations,
            residual: last,
        })
    }
}

/// Limits for [`JaModel::inverse_step_to_b_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseOptions {
    /// Largest field magnitude the solve may explore [A/m].
    pub h_max: f64,
    pub max_iterations: usize,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            h_max: 1e7,
            max_iterations: 100,
        }
    }
}

/// Advance a limb by `dh` with the default 1 A/m sub-step.
pub fn ja_step(state: LimbState, dh: f64, p: &JaParameters) -> Result<LimbState, JaError> {
    JaModel::new(*p).step(state, dh).map(|s| s.state)
}

/// Solve for the state reaching `b_target` from `state` (default options).
pub fn inverse_step_to_b(
    state: LimbState,
    b_target: f64,
    p: &JaParameters,
    tol: f64,
) -> Result<LimbState, JaError> {
    JaModel::new(*p).inverse_step_to_b(state, b_target, tol)
}

/// Drive a limb through a piecewise-linear field history, returning every
/// intermediate state at `resolution` A/m spacing.
pub fn trace_field_path(
    model: &JaModel,
    start: LimbState,
    waypoints: &[f64],
    resolution: f64,
) -> Result<Vec<LimbState>, JaError> {
    let mut out = vec![start];
    let mut state = start;
    for &target in waypoints {
        let span = target - state.h;
        let n = ((span.abs() / resolution).ceil() as usize).max(1);
        let origin = state.h;
        for i in 1..=n {
            let h = origin + span * i as f64 / n as f64;
            state = model.step(state, h - state.h)?.state;
            out.push(state);
        }
    }
    Ok(out)
}

/// ∮ H dB along a trace (trapezoidal) [J/m³].
pub fn loop_energy(trace: &[LimbState]) -> f64 {
    trace
        .windows(2)
        .map(|w| 0.5 * (w[0].h + w[1].h) * (w[1].b - w[0].b))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> JaParameters {
        JaParameters::default()
    }

    #[test]
    fn anhysteretic_anchor_values() {
        let p = params();
        assert_eq!(anhysteretic(0.0, &p), 0.0);
        let sat = anhysteretic(1e6 * p.a, &p);
        assert!((sat - p.m_s).abs() / p.m_s < 1e-4);
        // coth(1) - 1 evaluated independently
        let expected = (1.0f64.cosh() / 1.0f64.sinh() - 1.0) * p.m_s;
        let got = anhysteretic(p.a, &p);
        assert!((got - expected).abs() / expected < 1e-12);
        assert!((got / p.m_s - 0.313035).abs() < 0.313035 * 1e-4);
    }

    #[test]
    fn anhysteretic_odd_bounded_monotone_on_grid() {
        let p = params();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..1000 {
            let h = -100.0 * p.a + 200.0 * p.a * i as f64 / 999.0;
            let m = anhysteretic(h, &p);
            assert!(m.abs() < p.m_s);
            assert!((m + anhysteretic(-h, &p)).abs() <= 1e-9 * p.m_s);
            assert!(m > prev, "not increasing at h = {h}");
            prev = m;
        }
    }

    #[test]
    fn series_branch_matches_closed_form_at_the_switch() {
        let p = params();
        let x = LANGEVIN_SERIES_LIMIT;
        let closed = 1.0 / x.tanh() - 1.0 / x;
        assert!((anhysteretic(x * p.a * 0.999_999, &p) / p.m_s - closed).abs() < 1e-10);
        let slope_closed = {
            let x = 1.0001e-2_f64;
            1.0 / (x * x) - 1.0 / (x.sinh() * x.sinh())
        };
        assert!((langevin_slope(0.999_99e-2) - slope_closed).abs() < 1e-7);
    }

    #[test]
    fn zero_increment_is_identity() {
        let p = params();
        let s = LimbState::from_hm(12.0, 3.0e5);
        assert_eq!(ja_step(s, 0.0, &p).unwrap(), s);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut p = params();
        p.c = 1.5;
        assert!(p.validate().is_err());
        p = params();
        p.k = 0.0;
        assert!(p.validate().is_err());
        assert!(params().validate().is_ok());
    }

    #[test]
    fn non_finite_step_reported() {
        let p = params();
        let s = LimbState { h: f64::NAN, m: 0.0, b: f64::NAN };
        assert!(matches!(ja_step(s, 1.0, &p), Err(JaError::NonFiniteState { .. })));
    }

    #[test]
    fn symmetric_cycles_close_and_dissipate() {
        let p = params();
        let model = JaModel::new(p);
        let amp = 5.0 * p.k;
        let mut state = model.step(LimbState::demagnetized(), amp).unwrap().state;
        let mut ends = Vec::new();
        let mut last_trace = Vec::new();
        for _ in 0..4 {
            let trace = trace_field_path(&model, state, &[-amp, amp], 0.5).unwrap();
            state = *trace.last().unwrap();
            ends.push(state.m);
            last_trace = trace;
        }
        for w in ends.windows(2).skip(1) {
            assert!((w[1] - w[0]).abs() < 5e-3 * p.m_s, "loop not closed: {w:?}");
        }
        assert!(loop_energy(&last_trace) > 0.0);
    }

    #[test]
    fn inverse_solve_fixed_point() {
        let p = params();
        let s = ja_step(LimbState::demagnetized(), 40.0, &p).unwrap();
        assert_eq!(inverse_step_to_b(s, s.b, &p, 1e-9).unwrap(), s);
    }

    #[test]
    fn inverse_solve_matches_forward_sweep() {
        let p = params();
        let target = 0.5 * MU0 * p.m_s;
        let got = inverse_step_to_b(LimbState::demagnetized(), target, &p, 1e-9).unwrap();
        assert!((got.b - target).abs() <= 1e-9 * target);
        assert!(got.h > 0.0);
        assert!(got.m >= 0.45 * p.m_s && got.m <= 0.55 * p.m_s);

        // brute-force oracle: fine forward sweep until B crosses the target
        let model = JaModel::new(p);
        let mut s = LimbState::demagnetized();
        while s.b < target {
            s = model.step(s, 0.01).unwrap().state;
        }
        assert!((s.h - got.h).abs() < 0.05, "sweep {} vs solve {}", s.h, got.h);
    }

    #[test]
    fn inverse_solve_keeps_minor_loop_memory() {
        let p = params();
        let start = ja_step(LimbState::demagnetized(), 60.0, &p).unwrap();
        let start = ja_step(start, -30.0, &p).unwrap();
        let up = inverse_step_to_b(start, start.b + 0.05, &p, 1e-10).unwrap();
        let back = inverse_step_to_b(up, start.b, &p, 1e-10).unwrap();
        assert!((back.b - start.b).abs() < 1e-9);
        assert!((back.m - start.m).abs() > 0.0);
        assert!((back.h - start.h).abs() > 0.0);
    }

    #[test]
    fn inverse_solve_rejects_unreachable_target() {
        let p = params();
        let err = inverse_step_to_b(LimbState::demagnetized(), 50.0, &p, 1e-9).unwrap_err();
        assert!(matches!(err, JaError::OutOfRange { .. }));
    }

    #[test]
    fn remanent_state_sits_at_zero_field() {
        let p = params();
        let s = LimbState::remanent(0.8, &p).unwrap();
        assert_eq!(s.h, 0.0);
        assert!((s.b - 0.8).abs() < 1e-15);
        assert!(LimbState::remanent(2.0 * p.b_sat(), &p).is_err());
    }
}

use std::f64::consts::PI;

use super::{CircuitConfig, CircuitError};
use crate::jiles_atherton::{JaModel, JaStep, LimbState};

/// Winding j runs from terminal `WINDING_NODES[j].0` to `WINDING_NODES[j].1`.
pub(crate) const WINDING_NODES: [(usize, usize); 3] = [(0, 1), (2, 0), (1, 2)];

/// Everything the trapezoidal step needs from the previous time point.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitState {
    /// [s]
    pub t: f64,
    /// Source EMF at `t` [V].
    pub source_emf: [f64; 3],
    /// Grid branch current through each pole [A].
    pub source_current: [f64; 3],
    /// Current in the grid inductance (differs from the branch current by the damping resistor share) [A].
    pub grid_inductor_current: [f64; 3],
    /// Terminal-to-ground voltage [V].
    pub node_voltage: [f64; 3],
    /// Stray capacitor current [A].
    pub capacitor_current: [f64; 3],
    /// HV winding currents [A].
    pub winding_current: [f64; 3],
    /// Leg, then yoke, limb states.
    pub legs: [LimbState; 3],
    pub yokes: [LimbState; 2],
    /// Leg fluxes [Wb].
    pub leg_flux: [f64; 3],
    pub pole_closed: [bool; 3],
    /// Field increments of the last step, used to seed the next Newton solve.
    last_dh: [f64; 5],
}

impl CircuitState {
    /// De-energized and demagnetized, poles open.
    pub fn at_rest() -> Self {
        Self {
            t: 0.0,
            source_emf: [0.0; 3],
            source_current: [0.0; 3],
            grid_inductor_current: [0.0; 3],
            node_voltage: [0.0; 3],
            capacitor_current: [0.0; 3],
            winding_current: [0.0; 3],
            legs: [LimbState::demagnetized(); 3],
            yokes: [LimbState::demagnetized(); 2],
            leg_flux: [0.0; 3],
            pole_closed: [false; 3],
            last_dh: [0.0; 5],
        }
    }

    /// De-energized core holding the given leg fluxes at zero field.
    ///
    /// The fluxes are first projected onto φ1 + φ2 + φ3 = 0, the only
    /// zero-field configuration the three-legged core admits.
    pub fn with_remanence(cfg: &CircuitConfig, fluxes: [f64; 3]) -> Result<Self, CircuitError> {
        let mean = (fluxes[0] + fluxes[1] + fluxes[2]) / 3.0;
        let phi = [fluxes[0] - mean, fluxes[1] - mean, fluxes[2] - mean];
        let p = &cfg.core;
        let mut st = Self::at_rest();
        for j in 0..3 {
            st.legs[j] = LimbState::remanent(phi[j] / cfg.leg.area, p)?;
            st.leg_flux[j] = phi[j];
        }
        // yoke 1 carries leg 1's flux, yoke 2 the return of leg 3
        st.yokes[0] = LimbState::remanent(phi[0] / cfg.yoke.area, p)?;
        st.yokes[1] = LimbState::remanent(-phi[2] / cfg.yoke.area, p)?;
        Ok(st)
    }

    /// Line current into each primary terminal from the Δ windings [A].
    pub fn line_currents(&self) -> [f64; 3] {
        line_currents(&self.winding_current)
    }

    /// Voltage across each HV winding [V].
    pub fn winding_voltages(&self) -> [f64; 3] {
        winding_voltages(&self.node_voltage)
    }

    pub fn is_finite(&self) -> bool {
        let arrays = [
            self.source_current,
            self.node_voltage,
            self.capacitor_current,
            self.winding_current,
            self.leg_flux,
            self.grid_inductor_current,
        ];
        self.t.is_finite()
            && arrays.iter().all(|a| a.iter().all(|x| x.is_finite()))
            && self
                .legs
                .iter()
                .chain(self.yokes.iter())
                .all(|l| l.h.is_finite() && l.m.is_finite() && l.b.is_finite())
    }
}

pub(crate) fn line_currents(i_w: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (j, &(p, q)) in WINDING_NODES.iter().enumerate() {
        out[p] += i_w[j];
        out[q] -= i_w[j];
    }
    out
}

pub(crate) fn winding_voltages(u: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (j, &(p, q)) in WINDING_NODES.iter().enumerate() {
        out[j] = u[p] - u[q];
    }
    out
}

/// Balanced three-phase grid EMF, phase a = amplitude·sin(ωt + phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceVoltages {
    /// Phase-to-ground peak [V].
    pub amplitude: f64,
    pub omega: f64,
    /// [rad]
    pub phase: f64,
    /// Linear amplitude ramp from zero over this many seconds (0 = none).
    pub ramp: f64,
}

impl SourceVoltages {
    pub fn rated(cfg: &CircuitConfig, phase: f64) -> Self {
        Self {
            amplitude: cfg.v_primary * 2f64.sqrt() / 3f64.sqrt(),
            omega: 2.0 * PI * cfg.f,
            phase,
            ramp: 0.0,
        }
    }

    pub fn with_ramp(mut self, ramp: f64) -> Self {
        self.ramp = ramp;
        self
    }

    pub fn at(&self, t: f64) -> [f64; 3] {
        let scale = if self.ramp > 0.0 { (t / self.ramp).min(1.0) } else { 1.0 };
        let x = self.omega * t + self.phase;
        let amp = self.amplitude * scale;
        [
            amp * x.sin(),
            amp * (x - 2.0 * PI / 3.0).sin(),
            amp * (x + 2.0 * PI / 3.0).sin(),
        ]
    }
}

/// Fixed-step trapezoidal integrator for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: CircuitConfig,
    model: JaModel,
    dt: f64,
    /// Grid branch companion conductance with the pole closed [S].
    g_source: f64,
    /// dt/(2 L_g) [S].
    g_inductor: f64,
    /// 2C/dt [S].
    g_cap: f64,
    leakage: f64,
    r0: f64,
}

struct Evaluation {
    limbs: [JaStep; 5],
    winding_current: [f64; 3],
    node_voltage: [f64; 3],
    residual: [f64; 5],
    jacobian: [[f64; 5]; 5],
}

impl Solver {
    pub fn new(cfg: &CircuitConfig) -> Result<Self, CircuitError> {
        cfg.validate()?;
        let dt = cfg.simulation.dt;
        let g_inductor = dt / (2.0 * cfg.grid.l);
        let g_par = g_inductor + 1.0 / cfg.grid.r_parallel;
        Ok(Self {
            cfg: cfg.clone(),
            model: JaModel::new(cfg.core)
                .with_max_substep(cfg.simulation.ja_max_substep)
                .with_relative_substep(cfg.simulation.ja_relative_substep),
            dt,
            g_source: g_par / (1.0 + g_par * cfg.grid.r),
            g_inductor,
            g_cap: 2.0 * cfg.c_stray / dt,
            leakage: cfg.winding_leakage(),
            r0: cfg.zero_sequence_reluctance(),
        })
    }

    pub fn config(&self) -> &CircuitConfig {
        &self.cfg
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn limb_states(st: &CircuitState) -> [LimbState; 5] {
        [st.legs[0], st.legs[1], st.legs[2], st.yokes[0], st.yokes[1]]
    }

    /// Advance one step of `dt` with the pole configuration stored in `st`.
    /// `emf_next` is the source EMF at `st.t + dt`.
    pub fn step(&self, st: &CircuitState, emf_next: [f64; 3]) -> Result<CircuitState, CircuitError> {
        self.step_with_poles(st, emf_next, st.pole_closed)
    }

    pub fn step_with_poles(
        &self,
        st: &CircuitState,
        emf_next: [f64; 3],
        closed: [bool; 3],
    ) -> Result<CircuitState, CircuitError> {
        let cfg = &self.cfg;
        let t_next = st.t + self.dt;
        let limbs_prev = Self::limb_states(st);
        let h_prev: [f64; 5] = std::array::from_fn(|i| limbs_prev[i].h);

        // grid branch history terms (J in i = G (e - u) + J)
        let r_g = cfg.grid.r;
        let g_par = self.g_inductor + 1.0 / cfg.grid.r_parallel;
        let mut source_j = [0.0; 3];
        let mut node_s = [0.0; 3];
        let mut node_d = [0.0; 3];
        for k in 0..3 {
            node_s[k] = self.g_cap * st.node_voltage[k] + st.capacitor_current[k];
            node_d[k] = self.g_cap;
            if closed[k] {
                let w_prev = st.source_emf[k] - r_g * st.source_current[k] - st.node_voltage[k];
                let hist = st.grid_inductor_current[k] + self.g_inductor * w_prev;
                source_j[k] = hist / (1.0 + g_par * r_g);
                node_s[k] += self.g_source * emf_next[k] + source_j[k];
                node_d[k] += self.g_source;
            }
        }

        let v_prev = st.winding_voltages();
        let x0: [f64; 5] = std::array::from_fn(|i| h_prev[i] + st.last_dh[i]);
        let mut x = x0;

        let tol = cfg.simulation.newton_tol;
        let max_iter = cfg.simulation.max_newton_iterations;
        let mut converged = false;
        let mut eval = None;
        for _ in 0..max_iter {
            let ev = self.evaluate(st, &limbs_prev, &x, &node_s, &node_d, &v_prev)?;
            if converged {
                eval = Some(ev);
                break;
            }
            let delta = solve_dense(ev.jacobian, ev.residual.map(|r| -r))
                .ok_or(CircuitError::SingularJacobian { t: t_next })?;
            let mut last_update = 0.0f64;
            for i in 0..5 {
                x[i] += delta[i];
                last_update = last_update.max(delta[i].abs() / (x[i].abs() + 1.0));
            }
            if !last_update.is_finite() {
                return Err(CircuitError::NonFiniteState { t: t_next });
            }
            if last_update <= tol {
                converged = true;
            }
        }
        let ev = match eval {
            Some(ev) => ev,
            // plain Newton can cycle across a hysteresis turning point
            None => self.damped_newton(st, &limbs_prev, x0, &node_s, &node_d, &v_prev, t_next)?,
        };

        let mut next = CircuitState {
            t: t_next,
            source_emf: emf_next,
            source_current: [0.0; 3],
            grid_inductor_current: [0.0; 3],
            node_voltage: ev.node_voltage,
            capacitor_current: [0.0; 3],
            winding_current: ev.winding_current,
            legs: [ev.limbs[0].state, ev.limbs[1].state, ev.limbs[2].state],
            yokes: [ev.limbs[3].state, ev.limbs[4].state],
            leg_flux: std::array::from_fn(|j| cfg.leg.area * ev.limbs[j].state.b),
            pole_closed: closed,
            last_dh: std::array::from_fn(|i| x[i] - h_prev[i]),
        };
        for k in 0..3 {
            let u = next.node_voltage[k];
            next.capacitor_current[k] = self.g_cap * (u - st.node_voltage[k]) - st.capacitor_current[k];
            if closed[k] {
                let i_s = self.g_source * (emf_next[k] - u) + source_j[k];
                let w = emf_next[k] - r_g * i_s - u;
                next.source_current[k] = i_s;
                next.grid_inductor_current[k] = i_s - w / cfg.grid.r_parallel;
            }
        }
        if !next.is_finite() {
            return Err(CircuitError::NonFiniteState { t: t_next });
        }
        Ok(next)
    }

    /// Newton with backtracking on the residual norm.
    #[allow(clippy::too_many_arguments)]
    fn damped_newton(
        &self,
        st: &CircuitState,
        limbs_prev: &[LimbState; 5],
        mut x: [f64; 5],
        node_s: &[f64; 3],
        node_d: &[f64; 3],
        v_prev: &[f64; 3],
        t_next: f64,
    ) -> Result<Evaluation, CircuitError> {
        let tol = self.cfg.simulation.newton_tol;
        let max_iter = 4 * self.cfg.simulation.max_newton_iterations;
        let norm = |r: &[f64; 5]| r.iter().map(|v| v * v).sum::<f64>();
        let mut ev = self.evaluate(st, limbs_prev, &x, node_s, node_d, v_prev)?;
        let mut last_update = f64::INFINITY;
        for _ in 0..max_iter {
            let delta = solve_dense(ev.jacobian, ev.residual.map(|r| -r))
                .ok_or(CircuitError::SingularJacobian { t: t_next })?;
            let r0 = norm(&ev.residual);
            let mut lambda = 1.0;
            let (x_new, ev_new) = loop {
                let trial: [f64; 5] = std::array::from_fn(|i| x[i] + lambda * delta[i]);
                let ev_t = self.evaluate(st, limbs_prev, &trial, node_s, node_d, v_prev)?;
                if norm(&ev_t.residual) < r0 || lambda < 1e-3 {
                    break (trial, ev_t);
                }
                lambda *= 0.5;
            };
            last_update = (0..5)
                .map(|i| (x_new[i] - x[i]).abs() / (x_new[i].abs() + 1.0))
                .fold(0.0, f64::max);
            if !last_update.is_finite() {
                return Err(CircuitError::NonFiniteState { t: t_next });
            }
            x = x_new;
            ev = ev_new;
            if last_update <= tol {
                return Ok(ev);
            }
        }
        Err(CircuitError::NoConvergence {
            t: t_next,
            iterations: max_iter,
            last_update,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        st: &CircuitState,
        limbs_prev: &[LimbState; 5],
        x: &[f64; 5],
        node_s: &[f64; 3],
        node_d: &[f64; 3],
        v_prev: &[f64; 3],
    ) -> Result<Evaluation, CircuitError> {
        let cfg = &self.cfg;
        let n = cfg.n_turns as f64;
        let (a_l, l_l) = (cfg.leg.area, cfg.leg.length);
        let (a_y, l_y) = (cfg.yoke.area, cfg.yoke.length);
        let r0 = self.r0;

        let mut limbs = [JaStep {
            state: LimbState::default(),
            db_dh: 0.0,
        }; 5];
        for i in 0..5 {
            limbs[i] = self.model.step(limbs_prev[i], x[i] - limbs_prev[i].h)?;
        }
        let b: [f64; 5] = std::array::from_fn(|i| limbs[i].state.b);
        let s: [f64; 5] = std::array::from_fn(|i| limbs[i].db_dh);
        let phi = [a_l * b[0], a_l * b[1], a_l * b[2]];
        let phi_y = [a_y * b[3], a_y * b[4]];
        let phi01 = phi[0] - phi_y[0];
        let phi03 = phi[2] + phi_y[1];
        let f1 = r0 * phi01;
        let f3 = r0 * phi03;
        let f2 = f1 - l_y * x[3];
        let i_w = [
            (l_l * x[0] + f1) / n,
            (l_l * x[1] + f2) / n,
            (l_l * x[2] + f3) / n,
        ];

        // d i_w / d x
        let mut di = [[0.0; 5]; 3];
        di[0][0] = (l_l + r0 * a_l * s[0]) / n;
        di[0][3] = -r0 * a_y * s[3] / n;
        di[1][1] = l_l / n;
        di[1][0] = r0 * a_l * s[0] / n;
        di[1][3] = (-r0 * a_y * s[3] - l_y) / n;
        di[2][2] = (l_l + r0 * a_l * s[2]) / n;
        di[2][4] = r0 * a_y * s[4] / n;

        let i_line = line_currents(&i_w);
        let u: [f64; 3] = std::array::from_fn(|k| (node_s[k] - i_line[k]) / node_d[k]);
        let mut du = [[0.0; 5]; 3];
        for (j, &(p, q)) in WINDING_NODES.iter().enumerate() {
            for c in 0..5 {
                du[p][c] -= di[j][c] / node_d[p];
                du[q][c] += di[j][c] / node_d[q];
            }
        }

        let half = 0.5 * self.dt;
        let r = cfg.r_hv;
        let mut residual = [0.0; 5];
        let mut jac = [[0.0; 5]; 5];
        for (j, &(p, q)) in WINDING_NODES.iter().enumerate() {
            let v = u[p] - u[q];
            residual[j] = half * (v + v_prev[j])
                - half * r * (i_w[j] + st.winding_current[j])
                - self.leakage * (i_w[j] - st.winding_current[j])
                - n * (phi[j] - st.leg_flux[j]);
            for c in 0..5 {
                jac[j][c] = half * (du[p][c] - du[q][c]) - (half * r + self.leakage) * di[j][c];
            }
            jac[j][j] -= n * a_l * s[j];
        }
        // flux conservation at the middle-leg joint
        residual[3] = phi_y[1] - phi_y[0] - phi[1];
        jac[3][4] = a_y * s[4];
        jac[3][3] = -a_y * s[3];
        jac[3][1] = -a_l * s[1];
        // MMF around the yoke / air-path loop, scaled by 1/R0
        residual[4] = (phi01 - phi03) - (x[3] + x[4]) * l_y / r0;
        jac[4][0] = a_l * s[0];
        jac[4][3] = -a_y * s[3] - l_y / r0;
        jac[4][2] = -a_l * s[2];
        jac[4][4] = -a_y * s[4] - l_y / r0;

        Ok(Evaluation {
            limbs,
            winding_current: i_w,
            node_voltage: u,
            residual,
            jacobian: jac,
        })
    }
}

/// Gaussian elimination with row equilibration and partial pivoting.
pub(crate) fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for i in 0..N {
        let scale = a[i].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        for v in a[i].iter_mut() {
            *v /= scale;
        }
        b[i] /= scale;
    }
    for col in 0..N {
        let pivot = (col..N)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..N {
                    a[row][c] -= factor * a[col][c];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for c in row + 1..N {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_recovers_known_solution() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1e-9], [0.0, 2.0, 5e6]];
        let x = [1.0, -2.0, 3e-6];
        let b: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| a[i][j] * x[j]).sum());
        let got = solve_dense(a, b).unwrap();
        for i in 0..3 {
            assert!((got[i] - x[i]).abs() < 1e-12 * x[i].abs().max(1.0));
        }
        assert!(solve_dense([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0]).is_none());
    }

    #[test]
    fn delta_line_currents_sum_to_zero() {
        let i = line_currents(&[3.0, -1.5, 7.25]);
        assert_eq!(i[0] + i[1] + i[2], 0.0);
        assert_eq!(i[0], 3.0 + 1.5);
    }

    #[test]
    fn zero_state_zero_source_stays_at_rest() {
        let cfg = CircuitConfig::default();
        let solver = Solver::new(&cfg).unwrap();
        let mut st = CircuitState::at_rest();
        st.pole_closed = [true; 3];
        for _ in 0..200 {
            st = solver.step(&st, [0.0; 3]).unwrap();
        }
        assert_eq!(st.winding_current, [0.0; 3]);
        assert_eq!(st.node_voltage, [0.0; 3]);
        assert_eq!(st.leg_flux, [0.0; 3]);
    }

    #[test]
    fn open_poles_carry_no_current() {
        let cfg = CircuitConfig::default();
        let solver = Solver::new(&cfg).unwrap();
        let src = SourceVoltages::rated(&cfg, 0.3);
        let mut st = CircuitState::at_rest();
        st.pole_closed = [true, false, true];
        for _ in 0..500 {
            let e = src.at(st.t + solver.dt());
            st = solver.step(&st, e).unwrap();
            assert_eq!(st.source_current[1], 0.0);
        }
    }
}

use std::f64::consts::PI;

use super::solver::WINDING_NODES;
use super::{
    current_base, nominal_peak_flux, wrap_degrees, CircuitConfig, CircuitError, CircuitState, Solver,
    SourceVoltages, Waveform,
};

/// Periodic operating point reached after the warm-up.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: CircuitState,
    /// Peak |leg flux| over the last cycle [Wb].
    pub flux_peak: [f64; 3],
    /// Peak |line current| over the last cycle [A].
    pub current_peak: f64,
    /// Rms line current over the last cycle, averaged over phases [A].
    pub current_rms: f64,
    /// Last warm-up cycle.
    pub last_cycle: Waveform,
}

impl SteadyState {
    pub fn magnetizing_peak_pu(&self, cfg: &CircuitConfig) -> f64 {
        self.current_peak / current_base(cfg)
    }
}

/// Energize from rest with a ramped source and run the configured warm-up.
/// Phase a of the source crosses zero upwards at the end of the warm-up.
pub fn steady_state(cfg: &CircuitConfig) -> Result<SteadyState, CircuitError> {
    let solver = Solver::new(cfg)?;
    let sim = &cfg.simulation;
    let period = cfg.period();
    let source = SourceVoltages::rated(cfg, 0.0).with_ramp(sim.ramp_cycles as f64 * period);
    let steps_per_cycle = (period / solver.dt()).round() as usize;
    let total = steps_per_cycle * sim.warmup_cycles as usize;

    let mut st = CircuitState::at_rest();
    st.pole_closed = [true; 3];
    let mut last = Waveform::new(solver.dt());
    for n in 0..total {
        st = solver.step(&st, source.at((n + 1) as f64 * solver.dt()))?;
        st.t = (n + 1) as f64 * solver.dt();
        if n + steps_per_cycle >= total {
            last.push(&st);
        }
    }
    let flux_peak = last.peak_flux();
    let current_peak = last.peak_current();
    let current_rms = last
        .current
        .iter()
        .map(|c| (c.iter().map(|x| x * x).sum::<f64>() / c.len().max(1) as f64).sqrt())
        .sum::<f64>()
        / 3.0;
    Ok(SteadyState {
        state: st,
        flux_peak,
        current_peak,
        current_rms,
        last_cycle: last,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeenergizationResult {
    pub theta_open: f64,
    /// Remanent leg fluxes after the ring-down [Wb].
    pub fluxes: [f64; 3],
    /// Time of each pole's interruption, measured from the opening command [s].
    pub clearing_delay: [f64; 3],
}

/// Breaker-opening simulator sharing one warm-up between opening angles.
#[derive(Debug, Clone)]
pub struct Deenergizer {
    solver: Solver,
    source: SourceVoltages,
    warm: CircuitState,
    t_warm: f64,
}

impl Deenergizer {
    pub fn new(cfg: &CircuitConfig) -> Result<Self, CircuitError> {
        let steady = steady_state(cfg)?;
        let period = cfg.period();
        Ok(Self {
            solver: Solver::new(cfg)?,
            source: SourceVoltages::rated(cfg, 0.0).with_ramp(cfg.simulation.ramp_cycles as f64 * period),
            t_warm: steady.state.t,
            warm: steady.state,
        })
    }

    pub fn warm_state(&self) -> &CircuitState {
        &self.warm
    }

    pub fn open(&self, theta_open: f64) -> Result<DeenergizationResult, CircuitError> {
        self.open_recorded(theta_open, None)
    }

    /// As [`Deenergizer::open`], appending every step after the warm-up to `record`.
    pub fn open_recorded(
        &self,
        theta_open: f64,
        mut record: Option<&mut Waveform>,
    ) -> Result<DeenergizationResult, CircuitError> {
        if !theta_open.is_finite() {
            return Err(CircuitError::InvalidAngle(theta_open));
        }
        let theta = wrap_degrees(theta_open);
        let cfg = self.solver.config();
        let dt = self.solver.dt();
        let period = cfg.period();
        let steps_per_cycle = (period / dt).round() as usize;
        let cmd_step = (theta / 360.0 * steps_per_cycle as f64).round() as usize;
        let t_at = |n: usize| self.t_warm + n as f64 * dt;
        let t_cmd = t_at(cmd_step);

        let mut st = self.warm.clone();
        let mut n = 0usize;
        while n < cmd_step {
            st = self.solver.step(&st, self.source.at(t_at(n + 1)))?;
            st.t = t_at(n + 1);
            n += 1;
            if let Some(w) = record.as_deref_mut() {
                w.push(&st);
            }
        }

        let window = 2.0 * period;
        let max_open_steps = (window / dt).ceil() as usize;
        let mut clearing = [f64::NAN; 3];
        let mut opened = 0;
        while st.pole_closed.iter().any(|&c| c) {
            if opened > max_open_steps {
                let pole = st.pole_closed.iter().position(|&c| c).unwrap_or(0);
                return Err(CircuitError::PoleNeverOpened { pole, window });
            }
            let e = self.source.at(t_at(n + 1));
            let mut next = self.solver.step(&st, e)?;
            let mut poles = st.pole_closed;
            let mut changed = false;
            for k in 0..3 {
                if !poles[k] {
                    continue;
                }
                let (a, b) = (st.source_current[k], next.source_current[k]);
                if a * b <= 0.0 || b.abs() <= cfg.chop_current {
                    poles[k] = false;
                    changed = true;
                    clearing[k] = t_at(n + 1) - t_cmd;
                }
            }
            if changed {
                next = self.solver.step_with_poles(&st, e, poles)?;
            }
            st = next;
            st.t = t_at(n + 1);
            n += 1;
            opened += 1;
            if let Some(w) = record.as_deref_mut() {
                w.push(&st);
            }
        }

        let ring_steps = (cfg.simulation.ringdown / dt).round() as usize;
        for _ in 0..ring_steps {
            st = self.solver.step(&st, [0.0; 3])?;
            st.t = t_at(n + 1);
            n += 1;
            if let Some(w) = record.as_deref_mut() {
                w.push(&st);
            }
        }
        Ok(DeenergizationResult {
            theta_open: theta,
            fluxes: st.leg_flux,
            clearing_delay: clearing,
        })
    }
}

/// Warm up, open the breaker at `theta_open` degrees after the positive zero
/// crossing of phase a, and return the remanent leg fluxes [Wb].
pub fn simulate_deenergization(cfg: &CircuitConfig, theta_open: f64) -> Result<[f64; 3], CircuitError> {
    Ok(Deenergizer::new(cfg)?.open(theta_open)?.fluxes)
}

#[derive(Debug, Clone)]
pub struct EnergizationResult {
    pub waveform: Waveform,
    /// Peak |line current| in per-unit of the rated peak.
    pub i_max_pu: f64,
}

/// Closing simulator for one configuration.
#[derive(Debug, Clone)]
pub struct Energizer {
    solver: Solver,
    phi_limit: f64,
}

impl Energizer {
    pub fn new(cfg: &CircuitConfig) -> Result<Self, CircuitError> {
        Ok(Self {
            solver: Solver::new(cfg)?,
            phi_limit: 1.1 * nominal_peak_flux(cfg),
        })
    }

    pub fn config(&self) -> &CircuitConfig {
        self.solver.config()
    }

    /// Peak inrush in pu without recording the waveform.
    pub fn peak(&self, remanent: [f64; 3], theta_close: f64) -> Result<f64, CircuitError> {
        self.run(remanent, theta_close, None)
    }

    pub fn run(
        &self,
        remanent: [f64; 3],
        theta_close: f64,
        mut record: Option<&mut Waveform>,
    ) -> Result<f64, CircuitError> {
        if !theta_close.is_finite() {
            return Err(CircuitError::InvalidAngle(theta_close));
        }
        for &phi in &remanent {
            if !(phi.is_finite() && phi.abs() <= self.phi_limit) {
                return Err(CircuitError::RemanenceOutOfRange {
                    flux: phi,
                    limit: self.phi_limit,
                });
            }
        }
        let cfg = self.solver.config();
        let dt = self.solver.dt();
        let source = SourceVoltages::rated(cfg, wrap_degrees(theta_close).to_radians());
        let mut st = CircuitState::with_remanence(cfg, remanent)?;
        if let Some(w) = record.as_deref_mut() {
            w.push(&st);
        }
        st.pole_closed = [true; 3];
        let steps = (cfg.simulation.energization / dt).round() as usize;
        let mut peak = 0.0f64;
        for n in 0..steps {
            let t = (n + 1) as f64 * dt;
            st = self.solver.step(&st, source.at(t))?;
            st.t = t;
            for i in st.line_currents() {
                peak = peak.max(i.abs());
            }
            if let Some(w) = record.as_deref_mut() {
                w.push(&st);
            }
        }
        Ok(peak / current_base(cfg))
    }
}

/// Close all three poles at `theta_close` degrees on a core holding `remanent`
/// leg fluxes and simulate the configured energization interval.
pub fn simulate_energization(
    cfg: &CircuitConfig,
    remanent: [f64; 3],
    theta_close: f64,
) -> Result<EnergizationResult, CircuitError> {
    let energizer = Energizer::new(cfg)?;
    let mut waveform = Waveform::new(cfg.simulation.dt);
    let i_max_pu = energizer.run(remanent, theta_close, Some(&mut waveform))?;
    Ok(EnergizationResult { waveform, i_max_pu })
}

/// Steady-state leg fluxes the source imposes at source angle `theta` degrees,
/// ignoring the magnetizing current [Wb].
pub fn prospective_fluxes(cfg: &CircuitConfig, theta: f64) -> [f64; 3] {
    let phi_nom = nominal_peak_flux(cfg);
    let x = theta.to_radians();
    let phase = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];
    std::array::from_fn(|j| {
        let (p, q) = WINDING_NODES[j];
        // winding voltage phasor, then integrate (−90°)
        let re = phase[p].cos() - phase[q].cos();
        let im = phase[p].sin() - phase[q].sin();
        let ang = im.atan2(re);
        phi_nom * (x + ang - PI / 2.0).sin()
    })
}

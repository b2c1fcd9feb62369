use serde::{Deserialize, Serialize};

use super::CircuitError;
use crate::jiles_atherton::JaParameters;

/// Cross-section and mean magnetic path length of a core limb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimbGeometry {
    /// [m²]
    pub area: f64,
    /// [m]
    pub length: f64,
}

/// Series source impedance per phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridImpedance {
    /// [Ω]
    pub r: f64,
    /// [H]
    pub l: f64,
    /// Resistance across the grid inductance [Ω]. Damps the grid-inductance /
    /// stray-capacitance resonance, which no practical time step resolves.
    pub r_parallel: f64,
}

/// Time integration and scenario timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSettings {
    /// Fixed trapezoidal step [s].
    pub dt: f64,
    /// Relative tolerance of the Newton update on the limb fields.
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    /// Largest Jiles-Atherton field sub-step [A/m].
    pub ja_max_substep: f64,
    /// Sub-steps may grow to this fraction of |H| in saturation.
    pub ja_relative_substep: f64,
    /// Cycles of source-amplitude ramp at the start of a warm-up.
    pub ramp_cycles: u32,
    /// Total warm-up cycles before a breaker opening (ramp included).
    pub warmup_cycles: u32,
    /// Simulated time after the last pole clears [s].
    pub ringdown: f64,
    /// Simulated time after closing [s].
    pub energization: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            dt: 20e-6,
            newton_tol: 1e-9,
            max_newton_iterations: 50,
            ja_max_substep: 1.0,
            ja_relative_substep: 0.01,
            ramp_cycles: 5,
            warmup_cycles: 10,
            ringdown: 0.2,
            energization: 0.5,
        }
    }
}

/// Electrical and magnetic constants of the transformer and its supply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    /// Rated apparent power [VA].
    pub s_rated: f64,
    /// Primary line-to-line rms voltage [V].
    pub v_primary: f64,
    /// Secondary line-to-line rms voltage [V].
    pub v_secondary: f64,
    /// Rated primary rms line current [A].
    pub i_rated_primary: f64,
    /// [Hz]
    pub f: f64,
    pub n_turns: u32,
    /// [Ω]
    pub r_hv: f64,
    /// [Ω]
    pub r_lv: f64,
    /// HV–LV leakage [H].
    pub l_hl: f64,
    /// LV–core leakage [H].
    pub l_lc: f64,
    /// Zero-sequence inductance referred to the primary [H].
    pub l_0: f64,
    pub leg: LimbGeometry,
    pub yoke: LimbGeometry,
    /// Terminal-to-ground capacitance per primary terminal [F].
    pub c_stray: f64,
    pub grid: GridImpedance,
    /// A pole opening on command clears once |i| falls to this value [A];
    /// zero means interruption only at a current zero.
    pub chop_current: f64,
    pub core: JaParameters,
    pub simulation: SimulationSettings,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        let v_primary = 30e3;
        let f = 50.0;
        let n_turns = 824u32;
        let phi_nom = v_primary * 2f64.sqrt() / (2.0 * std::f64::consts::PI * f * n_turns as f64);
        let leg_area = phi_nom / 1.7;
        Self {
            s_rated: 7.4e6,
            v_primary,
            v_secondary: 20e3,
            i_rated_primary: 142.4,
            f,
            n_turns,
            r_hv: 1.28,
            r_lv: 0.26,
            l_hl: 81.12e-3,
            l_lc: 55.58e-3,
            l_0: 25.37e-6,
            leg: LimbGeometry {
                area: leg_area,
                length: 2.0,
            },
            yoke: LimbGeometry {
                area: leg_area,
                length: 1.2,
            },
            c_stray: 1e-9,
            grid: GridImpedance {
                r: 0.5,
                l: 1e-3,
                r_parallel: 1000.0,
            },
            chop_current: 0.0,
            core: JaParameters::default(),
            simulation: SimulationSettings::default(),
        }
    }
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<(), CircuitError> {
        let positive = [
            ("s_rated", self.s_rated),
            ("v_primary", self.v_primary),
            ("v_secondary", self.v_secondary),
            ("i_rated_primary", self.i_rated_primary),
            ("f", self.f),
            ("r_hv", self.r_hv),
            ("r_lv", self.r_lv),
            ("l_hl", self.l_hl),
            ("l_lc", self.l_lc),
            ("l_0", self.l_0),
            ("leg.area", self.leg.area),
            ("leg.length", self.leg.length),
            ("yoke.area", self.yoke.area),
            ("yoke.length", self.yoke.length),
            ("c_stray", self.c_stray),
            ("grid.r", self.grid.r),
            ("grid.l", self.grid.l),
            ("grid.r_parallel", self.grid.r_parallel),
            ("simulation.dt", self.simulation.dt),
            ("simulation.newton_tol", self.simulation.newton_tol),
            ("simulation.ja_max_substep", self.simulation.ja_max_substep),
            ("simulation.ringdown", self.simulation.ringdown),
            ("simulation.energization", self.simulation.energization),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CircuitError::InvalidConfig(format!("{name} = {v} must be finite and > 0")));
            }
        }
        if self.n_turns == 0 {
            return Err(CircuitError::InvalidConfig("n_turns must be > 0".into()));
        }
        if !(self.chop_current.is_finite() && self.chop_current >= 0.0) {
            return Err(CircuitError::InvalidConfig("chop_current must be >= 0".into()));
        }
        let s = &self.simulation;
        if !(1e-6..=100e-6).contains(&s.dt) {
            return Err(CircuitError::InvalidConfig(format!(
                "simulation.dt = {} s outside [1 µs, 100 µs]",
                s.dt
            )));
        }
        if !(0.0..=0.1).contains(&s.ja_relative_substep) {
            return Err(CircuitError::InvalidConfig("ja_relative_substep outside [0, 0.1]".into()));
        }
        if s.max_newton_iterations == 0 {
            return Err(CircuitError::InvalidConfig("max_newton_iterations must be > 0".into()));
        }
        if s.ramp_cycles > s.warmup_cycles {
            return Err(CircuitError::InvalidConfig("ramp_cycles exceeds warmup_cycles".into()));
        }
        self.core
            .validate()
            .map_err(|e| CircuitError::InvalidConfig(e.to_string()))?;
        Ok(())
    }

    /// Series inductance seen by each HV winding with the LV side open [H].
    pub fn winding_leakage(&self) -> f64 {
        self.l_hl + self.l_lc
    }

    /// Reluctance of one zero-sequence air path [A/Wb].
    pub fn zero_sequence_reluctance(&self) -> f64 {
        let n = self.n_turns as f64;
        n * n / self.l_0
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f
    }

    /// Copy with a different integration step.
    pub fn with_dt(&self, dt: f64) -> Self {
        let mut c = self.clone();
        c.simulation.dt = dt;
        c
    }
}

use std::io::Write;
use std::path::Path;

use super::{CircuitError, CircuitState};

pub const WAVEFORM_HEADER: &str = "t,ia,ib,ic,va,vb,vc,phi1,phi2,phi3";

/// Sampled primary-side quantities, one sample per solver step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Waveform {
    pub dt: f64,
    pub t: Vec<f64>,
    /// Line currents per terminal [A].
    pub current: [Vec<f64>; 3],
    /// HV winding voltages [V].
    pub voltage: [Vec<f64>; 3],
    /// Leg fluxes [Wb].
    pub flux: [Vec<f64>; 3],
}

impl Waveform {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn push(&mut self, st: &CircuitState) {
        self.t.push(st.t);
        let i = st.line_currents();
        let v = st.winding_voltages();
        for k in 0..3 {
            self.current[k].push(i[k]);
            self.voltage[k].push(v[k]);
            self.flux[k].push(st.leg_flux[k]);
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Largest |line current| over all phases and samples [A].
    pub fn peak_current(&self) -> f64 {
        self.current
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Largest |leg flux| per leg [Wb].
    pub fn peak_flux(&self) -> [f64; 3] {
        std::array::from_fn(|k| self.flux[k].iter().fold(0.0f64, |m, x| m.max(x.abs())))
    }

    /// Samples with `t` in `[from, to)`.
    pub fn window(&self, from: f64, to: f64) -> Waveform {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.t[i] >= from && self.t[i] < to)
            .collect();
        let pick = |v: &Vec<f64>| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Waveform {
            dt: self.dt,
            t: pick(&self.t),
            current: std::array::from_fn(|k| pick(&self.current[k])),
            voltage: std::array::from_fn(|k| pick(&self.voltage[k])),
            flux: std::array::from_fn(|k| pick(&self.flux[k])),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{WAVEFORM_HEADER}")?;
        for i in 0..self.len() {
            write!(w, "{:e}", self.t[i])?;
            for ch in [&self.current, &self.voltage, &self.flux] {
                for c in ch.iter() {
                    write!(w, ",{:e}", c[i])?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), CircuitError> {
        let file = std::fs::File::create(path).map_err(|e| CircuitError::Io(format!("{}: {e}", path.display())))?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf)
            .and_then(|_| buf.flush())
            .map_err(|e| CircuitError::Io(format!("{}: {e}", path.display())))
    }
}

//! One-step decision problem around the circuit: observe the opening angle and
//! remanent fluxes, pick a closing angle, receive a reward from the peak inrush.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuit::{nominal_peak_flux, CircuitConfig, CircuitError, Deenergizer, Energizer};
use crate::flux_data::{sample_scenario, FittedFluxCurve};

/// Closing angles 0°, 1°, …, 359°.
pub const N_ACTIONS: usize = 360;
pub const N_OPENINGS: usize = 360;
pub const FEATURE_DIM: usize = 5;
pub const TABLE_HEADER: &str = "theta_open_deg,theta_close_deg,phi1_wb,phi2_wb,phi3_wb,imax_pu";
const BINARY_MAGIC: &[u8; 8] = b"INRUSHT1";

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("inrush table has not been built")]
    TableMissing,
    #[error("table backend requested for off-grid scenario (opening {theta_open}°)")]
    BackendMismatch { theta_open: f64 },
    #[error("action {0} outside 0..{N_ACTIONS}")]
    InvalidAction(usize),
    #[error("simulation failed at opening {row}°, closing {col}°: {source}")]
    Build {
        row: usize,
        col: usize,
        #[source]
        source: CircuitError,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("table fingerprint {found} does not match configuration {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("malformed table file {path}: {message}")]
    Format { path: String, message: String },
    #[error("{0}")]
    Io(String),
}

fn io_err(path: &Path, e: std::io::Error) -> EnvError {
    EnvError::Io(format!("{}: {e}", path.display()))
}

/// Piecewise reward: −I when I > 1 pu, else 1 − I.
pub fn reward(i_max_pu: f64) -> f64 {
    if i_max_pu > 1.0 {
        -i_max_pu
    } else {
        1.0 - i_max_pu
    }
}

/// SHA-256 of the canonical TOML form of the circuit configuration.
pub fn config_fingerprint(cfg: &CircuitConfig) -> String {
    let text = toml::to_string(cfg).expect("circuit configuration serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Opening angle, remanent fluxes and their network encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdpState {
    /// [deg]
    pub theta_open: f64,
    /// [Wb]
    pub fluxes: [f64; 3],
    pub features: [f64; FEATURE_DIM],
}

impl MdpState {
    pub fn new(theta_open: f64, fluxes: [f64; 3], phi_nom: f64) -> Self {
        Self {
            theta_open,
            fluxes,
            features: encode(theta_open, fluxes, phi_nom),
        }
    }
}

/// (sin θ, cos θ, φ1/φ_nom, φ2/φ_nom, φ3/φ_nom).
pub fn encode(theta_open: f64, fluxes: [f64; 3], phi_nom: f64) -> [f64; FEATURE_DIM] {
    let (s, c) = theta_open.to_radians().sin_cos();
    [s, c, fluxes[0] / phi_nom, fluxes[1] / phi_nom, fluxes[2] / phi_nom]
}

/// Peak inrush for every (opening°, closing°) pair on the 1° grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InrushTable {
    /// Row-major, `N_OPENINGS × N_ACTIONS` [pu].
    peaks: Vec<f64>,
    /// Remanent fluxes per opening angle [Wb].
    fluxes: Vec<[f64; 3]>,
    fingerprint: String,
}

/// Progress of a table build: (finished, total) energizations.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

impl InrushTable {
    pub fn from_parts(fluxes: Vec<[f64; 3]>, peaks: Vec<f64>, fingerprint: String) -> Result<Self, EnvError> {
        if fluxes.len() != N_OPENINGS || peaks.len() != N_OPENINGS * N_ACTIONS {
            return Err(EnvError::Format {
                path: "<memory>".into(),
                message: format!("expected {N_OPENINGS} rows × {N_ACTIONS} columns"),
            });
        }
        if let Some(bad) = peaks.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(EnvError::Format {
                path: "<memory>".into(),
                message: format!("invalid peak {bad}"),
            });
        }
        Ok(Self {
            peaks,
            fluxes,
            fingerprint,
        })
    }

    /// Sweep the opening angle, then energize every distinct remanence at every
    /// closing angle. Rows with bit-identical remanence share their simulations.
    pub fn build(cfg: &CircuitConfig, progress: Option<Progress>) -> Result<Self, EnvError> {
        let deenergizer = Deenergizer::new(cfg)?;
        let fluxes: Vec<[f64; 3]> = (0..N_OPENINGS)
            .into_par_iter()
            .map(|row| {
                deenergizer
                    .open(row as f64)
                    .map(|r| r.fluxes)
                    .map_err(|source| EnvError::Build { row, col: 0, source })
            })
            .collect::<Result<_, _>>()?;

        let mut unique: Vec<[f64; 3]> = Vec::new();
        let mut index: HashMap<[u64; 3], usize> = HashMap::new();
        let mut row_key = Vec::with_capacity(N_OPENINGS);
        let mut first_row = Vec::new();
        for (row, f) in fluxes.iter().enumerate() {
            let key = f.map(f64::to_bits);
            let id = *index.entry(key).or_insert_with(|| {
                unique.push(*f);
                first_row.push(row);
                unique.len() - 1
            });
            row_key.push(id);
        }

        let energizer = Energizer::new(cfg)?;
        let total = unique.len() * N_ACTIONS;
        let done = AtomicUsize::new(0);
        let cells: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|cell| {
                let (u, col) = (cell / N_ACTIONS, cell % N_ACTIONS);
                let peak = energizer.peak(unique[u], col as f64).map_err(|source| EnvError::Build {
                    row: first_row[u],
                    col,
                    source,
                })?;
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(report) = progress {
                    report(n, total);
                }
                Ok(peak)
            })
            .collect::<Result<_, EnvError>>()?;

        let mut peaks = Vec::with_capacity(N_OPENINGS * N_ACTIONS);
        for &u in &row_key {
            peaks.extend_from_slice(&cells[u * N_ACTIONS..(u + 1) * N_ACTIONS]);
        }
        Self::from_parts(fluxes, peaks, config_fingerprint(cfg))
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn peak(&self, row: usize, col: usize) -> f64 {
        self.peaks[row * N_ACTIONS + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.peaks[row * N_ACTIONS..(row + 1) * N_ACTIONS]
    }

    pub fn fluxes(&self, row: usize) -> [f64; 3] {
        self.fluxes[row]
    }

    /// Lowest-index closing angle with the smallest peak.
    pub fn best_action(&self, row: usize) -> (usize, f64) {
        self.row(row)
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best })
    }

    pub fn worst_action(&self, row: usize) -> (usize, f64) {
        self.row(row)
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
    }

    pub fn max_peak(&self) -> f64 {
        self.peaks.iter().cloned().fold(0.0, f64::max)
    }

    /// Row whose grid fluxes equal `state` exactly.
    pub fn row_of(&self, state: &MdpState) -> Option<usize> {
        let t = state.theta_open;
        if t.fract() != 0.0 || !(0.0..N_OPENINGS as f64).contains(&t) {
            return None;
        }
        let row = t as usize;
        (self.fluxes[row] == state.fluxes).then_some(row)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TABLE_HEADER}")?;
        for row in 0..N_OPENINGS {
            let f = self.fluxes[row];
            for col in 0..N_ACTIONS {
                writeln!(w, "{row},{col},{},{},{},{}", f[0], f[1], f[2], self.peak(row, col))?;
            }
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, EnvError> {
        let fmt = |message: String| EnvError::Format {
            path: path.display().to_string(),
            message,
        };
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let mut lines = BufReader::new(file).lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == TABLE_HEADER => {}
            _ => return Err(fmt("missing header".into())),
        }
        let mut fluxes = vec![[f64::NAN; 3]; N_OPENINGS];
        let mut peaks = vec![f64::NAN; N_OPENINGS * N_ACTIONS];
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            let v: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| fmt(format!("line {}: {e}", i + 2)))?;
            if v.len() != 6 {
                return Err(fmt(format!("line {}: expected 6 fields", i + 2)));
            }
            let (row, col) = (v[0] as usize, v[1] as usize);
            if row >= N_OPENINGS || col >= N_ACTIONS {
                return Err(fmt(format!("line {}: cell out of range", i + 2)));
            }
            fluxes[row] = [v[2], v[3], v[4]];
            peaks[row * N_ACTIONS + col] = v[5];
        }
        let fp_path = fingerprint_path(path);
        let fingerprint = std::fs::read_to_string(&fp_path)
            .map_err(|e| io_err(&fp_path, e))?
            .trim()
            .to_string();
        Self::from_parts(fluxes, peaks, fingerprint).map_err(|e| fmt(e.to_string()))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.fingerprint.len() as u32).to_le_bytes())?;
        w.write_all(self.fingerprint.as_bytes())?;
        for f in &self.fluxes {
            for x in f {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        for p in &self.peaks {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self, EnvError> {
        let fmt = |message: &str| EnvError::Format {
            path: path.display().to_string(),
            message: message.into(),
        };
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| io_err(path, e))?;
        if bytes.len() < 12 || &bytes[..8] != BINARY_MAGIC {
            return Err(fmt("bad magic"));
        }
        let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let floats = 3 * N_OPENINGS + N_OPENINGS * N_ACTIONS;
        if bytes.len() != 12 + n + 8 * floats {
            return Err(fmt("unexpected length"));
        }
        let fingerprint = String::from_utf8(bytes[12..12 + n].to_vec()).map_err(|_| fmt("fingerprint is not UTF-8"))?;
        let mut vals = bytes[12 + n..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let fluxes = (0..N_OPENINGS)
            .map(|_| [vals.next().unwrap(), vals.next().unwrap(), vals.next().unwrap()])
            .collect();
        let peaks = vals.collect();
        Self::from_parts(fluxes, peaks, fingerprint).map_err(|e| fmt(&e.to_string()))
    }

    /// Write `inrush_table.csv`, its fingerprint sidecar, and `inrush_table.bin` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<TablePaths, EnvError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let paths = TablePaths::in_dir(dir);
        let write = |path: &Path, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
            let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
            f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
        };
        write(&paths.csv, &|w| self.write_csv(w))?;
        write(&paths.fingerprint, &|w| writeln!(w, "{}", self.fingerprint))?;
        write(&paths.binary, &|w| self.write_binary(w))?;
        Ok(paths)
    }

    /// Binary cache from `dir` if its fingerprint matches `cfg`.
    pub fn load_cached(dir: &Path, cfg: &CircuitConfig) -> Result<Option<Self>, EnvError> {
        let paths = TablePaths::in_dir(dir);
        if !paths.binary.exists() {
            return Ok(None);
        }
        let table = Self::read_binary(&paths.binary)?;
        Ok((table.fingerprint == config_fingerprint(cfg)).then_some(table))
    }

    pub fn check_fingerprint(&self, cfg: &CircuitConfig) -> Result<(), EnvError> {
        let expected = config_fingerprint(cfg);
        if self.fingerprint != expected {
            return Err(EnvError::FingerprintMismatch {
                expected,
                found: self.fingerprint.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TablePaths {
    pub csv: PathBuf,
    pub fingerprint: PathBuf,
    pub binary: PathBuf,
}

impl TablePaths {
    pub fn in_dir(dir: &Path) -> Self {
        let csv = dir.join("inrush_table.csv");
        Self {
            fingerprint: fingerprint_path(&csv),
            binary: dir.join("inrush_table.bin"),
            csv,
        }
    }
}

fn fingerprint_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".fingerprint");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Table,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResetMode {
    /// Uniform opening angle from the table sweep.
    TrainingSweep,
    /// Uniform opening angle, fluxes sampled inside the fitted band.
    Evaluation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub i_max_pu: f64,
    pub done: bool,
}

/// The inrush decision problem for one circuit configuration.
#[derive(Debug, Clone)]
pub struct InrushEnv {
    energizer: Energizer,
    table: Option<Arc<InrushTable>>,
    curves: [FittedFluxCurve; 3],
    phi_nom: f64,
}

impl InrushEnv {
    pub fn new(cfg: &CircuitConfig, table: Option<Arc<InrushTable>>) -> Result<Self, EnvError> {
        if let Some(t) = &table {
            t.check_fingerprint(cfg)?;
        }
        Ok(Self {
            energizer: Energizer::new(cfg)?,
            table,
            curves: FittedFluxCurve::measured_set(cfg.f),
            phi_nom: nominal_peak_flux(cfg),
        })
    }

    pub fn with_curves(mut self, curves: [FittedFluxCurve; 3]) -> Self {
        self.curves = curves;
        self
    }

    pub fn table(&self) -> Option<&InrushTable> {
        self.table.as_deref()
    }

    pub fn phi_nom(&self) -> f64 {
        self.phi_nom
    }

    pub fn config(&self) -> &CircuitConfig {
        self.energizer.config()
    }

    pub fn state(&self, theta_open: f64, fluxes: [f64; 3]) -> MdpState {
        MdpState::new(theta_open, fluxes, self.phi_nom)
    }

    pub fn reset<R: Rng + ?Sized>(&self, mode: ResetMode, rng: &mut R) -> Result<MdpState, EnvError> {
        match mode {
            ResetMode::TrainingSweep => {
                let table = self.table.as_ref().ok_or(EnvError::TableMissing)?;
                let row = rng.random_range(0..N_OPENINGS);
                Ok(self.state(row as f64, table.fluxes(row)))
            }
            ResetMode::Evaluation => {
                let theta = rng.random_range(0.0..360.0);
                let s = sample_scenario(theta, &self.curves, rng);
                Ok(self.state(s.theta_open, s.fluxes))
            }
        }
    }

    /// Close at `action` degrees. Episodes last one step.
    pub fn step(&self, state: &MdpState, action: usize, backend: Backend) -> Result<StepOutcome, EnvError> {
        if action >= N_ACTIONS {
            return Err(EnvError::InvalidAction(action));
        }
        let i_max_pu = match backend {
            Backend::Table => {
                let table = self.table.as_ref().ok_or(EnvError::TableMissing)?;
                let row = table.row_of(state).ok_or(EnvError::BackendMismatch {
                    theta_open: state.theta_open,
                })?;
                table.peak(row, action)
            }
            Backend::Direct => self.energizer.peak(state.fluxes, action as f64)?,
        };
        Ok(StepOutcome {
            reward: reward(i_max_pu),
            i_max_pu,
            done: true,
        })
    }
}

/// A one-step episodic task with discrete actions, as seen by the agents.
pub trait Environment {
    fn feature_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Start an episode; returns the observation features.
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, EnvError>;
    /// Reward for `action` in the current episode, which then ends.
    fn step(&mut self, action: usize) -> Result<f64, EnvError>;
}

/// Training view of [`InrushEnv`]: table sweep states, table rewards.
#[derive(Debug, Clone)]
pub struct TableEnvironment {
    env: InrushEnv,
    current: Option<MdpState>,
}

impl TableEnvironment {
    pub fn new(env: InrushEnv) -> Result<Self, EnvError> {
        if env.table.is_none() {
            return Err(EnvError::TableMissing);
        }
        Ok(Self { env, current: None })
    }
}

impl Environment for TableEnvironment {
    fn feature_dim(&self) -> usize {
        FEATURE_DIM
    }

    fn n_actions(&self) -> usize {
        N_ACTIONS
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, EnvError> {
        let s = self.env.reset(ResetMode::TrainingSweep, rng)?;
        self.current = Some(s);
        Ok(s.features.to_vec())
    }

    fn step(&mut self, action: usize) -> Result<f64, EnvError> {
        let s = self.current.take().ok_or(EnvError::TableMissing)?;
        Ok(self.env.step(&s, action, Backend::Table)?.reward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn reward_anchor_cases() {
        assert_eq!(reward(2.04), -2.04);
        assert!((reward(0.28) - 0.72).abs() < 1e-15);
        assert_eq!(reward(1.0), 0.0);
        assert_eq!(reward(0.0), 1.0);
    }

    #[test]
    fn encoding_is_bounded_and_pure() {
        let s = MdpState::new(90.0, [0.05, -0.1, 0.05], 0.1);
        assert!((s.features[0] - 1.0).abs() < 1e-15);
        assert!(s.features[1].abs() < 1e-15);
        assert_eq!(s.features[3], -1.0);
        assert_eq!(s, MdpState::new(90.0, [0.05, -0.1, 0.05], 0.1));
    }

    fn synthetic_table() -> InrushTable {
        let fluxes = (0..N_OPENINGS).map(|r| [r as f64 * 1e-4, 0.0, -(r as f64) * 1e-4]).collect();
        let peaks = (0..N_OPENINGS * N_ACTIONS)
            .map(|i| 0.1 + ((i * 7919) % 1000) as f64 / 400.0)
            .collect();
        InrushTable::from_parts(fluxes, peaks, "abc".into()).unwrap()
    }

    #[test]
    fn table_files_round_trip() {
        let t = synthetic_table();
        let dir = tempfile::tempdir().unwrap();
        let paths = t.save(dir.path()).unwrap();
        assert_eq!(InrushTable::read_binary(&paths.binary).unwrap(), t);
        assert_eq!(InrushTable::read_csv(&paths.csv).unwrap(), t);
        let text = std::fs::read_to_string(&paths.csv).unwrap();
        assert_eq!(text.lines().count(), 1 + N_OPENINGS * N_ACTIONS);
    }

    #[test]
    fn best_and_worst_actions_break_ties_low() {
        let mut peaks = vec![1.0; N_OPENINGS * N_ACTIONS];
        peaks[5] = 0.2;
        peaks[9] = 0.2;
        peaks[20] = 3.0;
        let t = InrushTable::from_parts(vec![[0.0; 3]; N_OPENINGS], peaks, String::new()).unwrap();
        assert_eq!(t.best_action(0), (5, 0.2));
        assert_eq!(t.worst_action(0), (20, 3.0));
    }

    #[test]
    fn grid_lookup_requires_exact_fluxes() {
        let t = synthetic_table();
        let on = MdpState::new(12.0, t.fluxes(12), 0.16);
        assert_eq!(t.row_of(&on), Some(12));
        let off = MdpState::new(12.0, [0.0012, 0.0, -0.0011], 0.16);
        assert_eq!(t.row_of(&off), None);
        assert_eq!(t.row_of(&MdpState::new(12.5, t.fluxes(12), 0.16)), None);
    }

    #[test]
    fn training_resets_are_uniform() {
        let cfg = CircuitConfig::default();
        let mut t = synthetic_table();
        t.fingerprint = config_fingerprint(&cfg);
        let env = InrushEnv::new(&cfg, Some(Arc::new(t))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = [0usize; N_OPENINGS];
        for _ in 0..10_000 {
            let s = env.reset(ResetMode::TrainingSweep, &mut rng).unwrap();
            counts[s.theta_open as usize] += 1;
        }
        let expect = 10_000.0 / 360.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        // 359 degrees of freedom: mean 359, sd ≈ 26.8
        assert!(chi2 < 359.0 + 5.0 * 26.8, "{chi2}");
        assert!(counts.iter().all(|&c| (c as f64 - expect).abs() < 5.0 * expect.sqrt()));
    }

    #[test]
    fn table_backend_steps() {
        let cfg = CircuitConfig::default();
        let mut t = synthetic_table();
        t.fingerprint = config_fingerprint(&cfg);
        let (best, lo) = t.best_action(33);
        let (worst, hi) = t.worst_action(33);
        let env = InrushEnv::new(&cfg, Some(Arc::new(t.clone()))).unwrap();
        let s = env.state(33.0, t.fluxes(33));
        let a = env.step(&s, best, Backend::Table).unwrap();
        assert_eq!(a.reward, reward(lo));
        assert!(a.done);
        let b = env.step(&s, worst, Backend::Table).unwrap();
        assert_eq!(b.reward, reward(hi));
        assert_eq!(env.step(&s, worst, Backend::Table).unwrap(), b);
        let off = env.state(33.5, t.fluxes(33));
        assert!(matches!(env.step(&off, 0, Backend::Table), Err(EnvError::BackendMismatch { .. })));
        assert!(matches!(env.step(&s, 360, Backend::Table), Err(EnvError::InvalidAction(360))));
    }

    #[test]
    fn missing_table_and_wrong_fingerprint() {
        let cfg = CircuitConfig::default();
        let env = InrushEnv::new(&cfg, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(env.reset(ResetMode::TrainingSweep, &mut rng), Err(EnvError::TableMissing)));
        let s = env.reset(ResetMode::Evaluation, &mut rng).unwrap();
        let curves = FittedFluxCurve::measured_set(cfg.f);
        for i in 0..3 {
            let dev = s.fluxes[i] - crate::flux_data::fitted_flux(s.theta_open, &curves[i]);
            assert!(dev.abs() <= curves[i].tolerance * (1.0 + 1e-12));
        }
        assert!(matches!(
            InrushEnv::new(&cfg, Some(Arc::new(synthetic_table()))),
            Err(EnvError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn fingerprint_tracks_the_config() {
        let cfg = CircuitConfig::default();
        let mut other = cfg.clone();
        other.grid.l *= 1.1;
        assert_eq!(config_fingerprint(&cfg), config_fingerprint(&cfg.clone()));
        assert_ne!(config_fingerprint(&cfg), config_fingerprint(&other));
        assert_eq!(config_fingerprint(&cfg).len(), 64);
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::calibrate::CalibrationTargets;
use super::HarnessError;
use crate::circuit::CircuitConfig;
use crate::rl::RlHyperparameters;

/// Opening angles of the validation measurements [deg].
pub const VALIDATION_ANGLES: [f64; 21] = [
    7.0, 13.0, 33.0, 34.0, 37.0, 53.0, 79.0, 81.0, 92.0, 135.0, 147.0, 178.0, 180.0, 189.0, 221.0, 224.0,
    278.0, 285.0, 304.0, 306.0, 313.0,
];

/// Output locations. Relative entries live under `out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub out: PathBuf,
    pub table: PathBuf,
    pub networks: PathBuf,
    pub logs: PathBuf,
    pub results: PathBuf,
    /// Remanent-flux measurements (`theta_open_deg,phi1_wb,phi2_wb,phi3_wb`).
    /// When set, evaluation uses these rows instead of sampling the fitted curves.
    pub measurements: Option<PathBuf>,
    /// Measured uncontrolled closings (`theta_open_deg,imax_pu`) for validation.
    pub baseline: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            out: "out".into(),
            table: "table".into(),
            networks: "networks".into(),
            logs: "logs".into(),
            results: "results".into(),
            measurements: None,
            baseline: None,
        }
    }
}

impl Paths {
    fn under_out(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out.join(p)
        }
    }

    pub fn table_dir(&self) -> PathBuf {
        self.under_out(&self.table)
    }

    pub fn networks_dir(&self) -> PathBuf {
        self.under_out(&self.networks)
    }

    pub fn logs_dir(&self) -> PathBuf {
        self.under_out(&self.logs)
    }

    pub fn results_dir(&self) -> PathBuf {
        self.under_out(&self.results)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSettings {
    /// Scenarios drawn from the fitted flux curves.
    pub scenarios: usize,
    pub validation_angles: Vec<f64>,
    /// Flux draws (and random baseline closings) per validation angle.
    pub draws_per_angle: usize,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            scenarios: 48,
            validation_angles: VALIDATION_ANGLES.to_vec(),
            draws_per_angle: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub circuit: CircuitConfig,
    pub rl: RlHyperparameters,
    pub paths: Paths,
    pub evaluation: EvaluationSettings,
    pub calibration: CalibrationTargets,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            circuit: CircuitConfig::default(),
            rl: RlHyperparameters::default(),
            paths: Paths::default(),
            evaluation: EvaluationSettings::default(),
            calibration: CalibrationTargets::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.circuit.validate()?;
        self.rl.validate()?;
        if self.evaluation.scenarios == 0 || self.evaluation.draws_per_angle == 0 {
            return Err(HarnessError::Config("evaluation counts must be positive".into()));
        }
        if self.evaluation.validation_angles.iter().any(|a| !a.is_finite()) {
            return Err(HarnessError::Config("validation angles must be finite".into()));
        }
        Ok(())
    }
}

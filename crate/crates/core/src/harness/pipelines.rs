use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HarnessError, RunConfig};
use crate::circuit::{Deenergizer, Energizer, Waveform};
use crate::environment::{
    config_fingerprint, InrushEnv, InrushTable, Progress, TableEnvironment, TablePaths, N_ACTIONS, N_OPENINGS,
};
use crate::flux_data::{load_measurements, sample_evaluation_set, FittedFluxCurve, SwitchingScenario};
use crate::rl::{self, evaluate_policy, write_results, write_training_log, AgentKind, Evaluation, Policy, TrainedAgent};

/// Independent random streams derived from the run seed.
pub(crate) mod stream {
    pub const EVALUATION: u64 = 1;
    pub const VALIDATION: u64 = 2;
    pub const SPOT_CHECK: u64 = 3;
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn create_writer(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Debug, Clone)]
pub struct BuildSummary {
    pub cache_hit: bool,
    pub paths: TablePaths,
    pub elapsed: Duration,
}

/// Load the cached table for the current circuit, or build and save it.
pub fn build_table(
    run: &RunConfig,
    progress: Option<Progress>,
) -> Result<(Arc<InrushTable>, BuildSummary), HarnessError> {
    let start = Instant::now();
    let dir = run.paths.table_dir();
    let paths = TablePaths::in_dir(&dir);
    if let Some(table) = InrushTable::load_cached(&dir, &run.circuit)? {
        return Ok((
            Arc::new(table),
            BuildSummary {
                cache_hit: true,
                paths,
                elapsed: start.elapsed(),
            },
        ));
    }
    let table = InrushTable::build(&run.circuit, progress)?;
    table.save(&dir)?;
    Ok((
        Arc::new(table),
        BuildSummary {
            cache_hit: false,
            paths,
            elapsed: start.elapsed(),
        },
    ))
}

/// Re-simulate `n` random cells (opening and closing) and demand bit-identical peaks.
pub fn spot_check(run: &RunConfig, table: &InrushTable, n: usize) -> Result<usize, HarnessError> {
    let mut rng = rng_for(run.seed, stream::SPOT_CHECK);
    let cells: Vec<(usize, usize)> = (0..n)
        .map(|_| (rng.random_range(0..N_OPENINGS), rng.random_range(0..N_ACTIONS)))
        .collect();
    let deenergizer = Deenergizer::new(&run.circuit)?;
    let energizer = Energizer::new(&run.circuit)?;
    cells
        .par_iter()
        .map(|&(row, col)| {
            let fluxes = deenergizer.open(row as f64)?.fluxes;
            let direct = energizer.peak(fluxes, col as f64)?;
            let cached = table.peak(row, col);
            if fluxes != table.fluxes(row) || direct.to_bits() != cached.to_bits() {
                return Err(HarnessError::SpotCheck { row, col, cached, direct });
            }
            Ok(())
        })
        .collect::<Result<Vec<()>, _>>()
        .map(|v| v.len())
}

/// Sidecar written next to every network file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentMeta {
    pub agent: String,
    pub seed: u64,
    pub iterations: usize,
    pub fingerprint: String,
}

impl AgentMeta {
    pub fn path(network: &Path) -> PathBuf {
        let mut s = network.as_os_str().to_owned();
        s.push(".meta");
        PathBuf::from(s)
    }
}

pub fn network_path(run: &RunConfig, kind: AgentKind) -> PathBuf {
    run.paths.networks_dir().join(format!("{kind}.net"))
}

pub fn training_log_path(run: &RunConfig, kind: AgentKind) -> PathBuf {
    run.paths.logs_dir().join(format!("{kind}_training.csv"))
}

fn iterations(run: &RunConfig, kind: AgentKind) -> usize {
    match kind {
        AgentKind::DqnLinear => run.rl.dqn_linear.total_iterations,
        AgentKind::DqnExponential => run.rl.dqn_exp.total_iterations,
        AgentKind::Ppo => run.rl.ppo.total_iterations,
    }
}

/// Train on the table and write the network, its sidecar and the training log.
pub fn train_agent(run: &RunConfig, kind: AgentKind, table: Arc<InrushTable>) -> Result<TrainedAgent, HarnessError> {
    let env = InrushEnv::new(&run.circuit, Some(table))?;
    let mut env = TableEnvironment::new(env)?;
    let agent = rl::train(kind, &mut env, &run.rl, run.seed)?;

    let net = network_path(run, kind);
    fs::create_dir_all(run.paths.networks_dir())?;
    agent.policy.save(&net)?;
    let meta = AgentMeta {
        agent: kind.name().to_string(),
        seed: run.seed,
        iterations: iterations(run, kind),
        fingerprint: config_fingerprint(&run.circuit),
    };
    fs::write(AgentMeta::path(&net), toml::to_string(&meta).expect("meta serializes"))?;
    let mut w = create_writer(&training_log_path(run, kind))?;
    write_training_log(&mut w, &agent.log)?;
    w.flush()?;
    Ok(agent)
}

/// Load a trained network, refusing one recorded for a different circuit.
pub fn load_agent(run: &RunConfig, kind: AgentKind) -> Result<Policy, HarnessError> {
    let net = network_path(run, kind);
    let meta_path = AgentMeta::path(&net);
    let text = fs::read_to_string(&meta_path).map_err(|e| HarnessError::Input {
        path: meta_path.clone(),
        message: e.to_string(),
    })?;
    let meta: AgentMeta = toml::from_str(&text).map_err(|e| HarnessError::Input {
        path: meta_path,
        message: e.to_string(),
    })?;
    let expected = config_fingerprint(&run.circuit);
    if meta.fingerprint != expected {
        return Err(HarnessError::FingerprintMismatch {
            path: net,
            expected,
            found: meta.fingerprint,
        });
    }
    Ok(Policy::load(kind, &net)?)
}

/// Measured scenarios when a measurement file is configured, otherwise draws
/// from the fitted flux curves.
pub fn evaluation_scenarios(run: &RunConfig) -> Result<Vec<SwitchingScenario>, HarnessError> {
    if let Some(path) = &run.paths.measurements {
        return Ok(load_measurements(path)?);
    }
    let curves = FittedFluxCurve::measured_set(run.circuit.f);
    let mut rng = rng_for(run.seed, stream::EVALUATION);
    Ok(sample_evaluation_set(&curves, run.evaluation.scenarios, &mut rng))
}

/// Greedy evaluation by direct simulation; writes the per-scenario results
/// and the summary statistics.
pub fn evaluate_agent(
    run: &RunConfig,
    kind: AgentKind,
    policy: &Policy,
    scenarios: &[SwitchingScenario],
) -> Result<Evaluation, HarnessError> {
    let eval = evaluate_policy(policy, scenarios, &run.circuit)?;
    let dir = run.paths.results_dir();
    let mut w = create_writer(&dir.join(format!("{kind}_evaluation.csv")))?;
    write_results(&mut w, &eval.rows)?;
    w.flush()?;
    let mut w = create_writer(&dir.join(format!("{kind}_summary.csv")))?;
    super::write_summary(&mut w, &eval.stats)?;
    w.flush()?;
    Ok(eval)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulateRequest {
    /// De-energize at this angle first [deg].
    pub theta_open: Option<f64>,
    /// Explicit remanent leg fluxes [Wb].
    pub remanent: Option<[f64; 3]>,
    /// Closing angle [deg]; ignored when sweeping.
    pub theta_close: f64,
    /// Peak for every closing angle on the action grid instead of one waveform.
    pub sweep_close: bool,
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub remanent: [f64; 3],
    pub waveform: Option<Waveform>,
    pub i_max_pu: f64,
    /// One peak per closing angle when sweeping.
    pub sweep: Vec<f64>,
}

pub fn simulate(run: &RunConfig, req: &SimulateRequest) -> Result<SimulateOutcome, HarnessError> {
    let cfg = &run.circuit;
    let remanent = match (req.remanent, req.theta_open) {
        (Some(r), _) => r,
        (None, Some(theta)) => Deenergizer::new(cfg)?.open(theta)?.fluxes,
        (None, None) => [0.0; 3],
    };
    let energizer = Energizer::new(cfg)?;
    if req.sweep_close {
        let sweep = (0..N_ACTIONS)
            .into_par_iter()
            .map(|c| energizer.peak(remanent, c as f64))
            .collect::<Result<Vec<f64>, _>>()?;
        let i_max_pu = sweep.iter().cloned().fold(0.0, f64::max);
        return Ok(SimulateOutcome {
            remanent,
            waveform: None,
            i_max_pu,
            sweep,
        });
    }
    let mut waveform = Waveform::new(cfg.simulation.dt);
    let i_max_pu = energizer.run(remanent, req.theta_close, Some(&mut waveform))?;
    Ok(SimulateOutcome {
        remanent,
        waveform: Some(waveform),
        i_max_pu,
        sweep: Vec::new(),
    })
}

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use inrush::environment::TABLE_HEADER;
use inrush::harness::{self, HarnessError, RunConfig, SimulateRequest};
use inrush::rl::{AgentKind, SummaryStats};

#[derive(Parser)]
#[command(name = "inrush", version, about = "Transformer inrush minimization by learned closing angles")]
struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for table builds and evaluations.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the output root directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load) the opening × closing inrush table.
    BuildTable {
        /// Re-simulate this many random cells and require exact agreement.
        #[arg(long)]
        spot_check: Option<usize>,
    },
    /// Train agents on the table.
    Train(AgentArgs),
    /// Evaluate trained agents on remanence scenarios by direct simulation.
    Evaluate {
        #[command(flatten)]
        agents: AgentArgs,
        /// Measured scenarios (`theta_open_deg,phi1_wb,phi2_wb,phi3_wb`).
        #[arg(long)]
        scenarios: Option<PathBuf>,
    },
    /// Compare trained agents with uncontrolled closing at the validation angles.
    Validate {
        #[command(flatten)]
        agents: AgentArgs,
        /// Measured uncontrolled closings (`theta_open_deg,imax_pu`).
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Simulate one energization and write its waveform.
    Simulate {
        /// De-energize at this angle first [deg].
        #[arg(long, conflicts_with = "remanent")]
        theta_open: Option<f64>,
        /// Remanent leg fluxes `phi1,phi2,phi3` [Wb].
        #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
        remanent: Option<Vec<f64>>,
        /// Closing angle [deg].
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta_close: f64,
        /// Peak for every closing angle instead of one waveform.
        #[arg(long)]
        sweep_close: bool,
    },
    /// Search circuit parameters until the inrush bands hold.
    Calibrate {
        /// Where to write the calibrated run configuration.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AgentArgs {
    /// `dqn-linear`, `dqn-exp`, `ppo` or `all`.
    #[arg(long, default_value = "all")]
    agent: String,
    /// Override the number of training iterations.
    #[arg(long)]
    iterations: Option<usize>,
}

impl AgentArgs {
    fn kinds(&self) -> Result<Vec<AgentKind>, HarnessError> {
        if self.agent == "all" {
            return Ok(AgentKind::ALL.to_vec());
        }
        Ok(vec![self.agent.parse()?])
    }
}

fn writer(path: &PathBuf) -> Result<BufWriter<File>, HarnessError> {
    if let Some(d) = path.parent() {
        fs::create_dir_all(d)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let file_paths = cfg.paths.clone();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.paths.out = o.clone();
    }
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }

    match cli.command {
        Command::BuildTable { spot_check } => {
            let reported = AtomicUsize::new(0);
            let progress = |done: usize, total: usize| {
                let pct = 100 * done / total;
                if pct >= reported.load(Ordering::Relaxed) + 5 {
                    reported.store(pct, Ordering::Relaxed);
                    eprintln!("{pct:3}% ({done}/{total} energizations)");
                }
            };
            let (table, summary) = harness::build_table(&cfg, Some(&progress))?;
            if summary.cache_hit {
                println!("table cache hit: {}", summary.paths.binary.display());
            } else {
                println!("table written: {} ({})", summary.paths.csv.display(), TABLE_HEADER);
            }
            println!(
                "wall time {:.1} s, worst peak {:.3} pu",
                summary.elapsed.as_secs_f64(),
                table.max_peak()
            );
            if let Some(n) = spot_check {
                let checked = harness::spot_check(&cfg, &table, n)?;
                println!("spot check: {checked} cells agree exactly");
            }
        }
        Command::Train(args) => {
            let kinds = args.kinds()?;
            if let Some(t) = args.iterations {
                cfg.rl = cfg.rl.with_iterations(t);
            }
            let (table, _) = harness::build_table(&cfg, None)?;
            for kind in kinds {
                let start = Instant::now();
                let agent = harness::train_agent(&cfg, kind, table.clone())?;
                let last = agent.log.last().map(|r| r.mean_reward).unwrap_or(f64::NAN);
                println!(
                    "{kind}: trailing-100 mean reward {last:.4} ({:.1} s) -> {}",
                    start.elapsed().as_secs_f64(),
                    harness::network_path(&cfg, kind).display()
                );
            }
        }
        Command::Evaluate { agents, scenarios } => {
            if let Some(p) = scenarios {
                cfg.paths.measurements = Some(p);
            }
            let set = harness::evaluation_scenarios(&cfg)?;
            for kind in agents.kinds()? {
                let policy = harness::load_agent(&cfg, kind)?;
                let eval = harness::evaluate_agent(&cfg, kind, &policy, &set)?;
                println!("{kind}: {} scenarios", eval.rows.len());
                for (label, v) in SummaryStats::LABELS.iter().zip(eval.stats.values()) {
                    println!("  {label:<8} {v:.4} pu");
                }
            }
        }
        Command::Validate { agents, baseline } => {
            let mut loaded = Vec::new();
            for kind in agents.kinds()? {
                loaded.push((kind.name().to_string(), harness::load_agent(&cfg, kind)?));
            }
            let baseline_path = baseline.or_else(|| cfg.paths.baseline.clone());
            let measured = baseline_path.as_deref().map(harness::load_baseline).transpose()?;
            let report = harness::validate(&cfg, &loaded, measured.as_deref())?;
            let path = cfg.paths.results_dir().join("validation.csv");
            let mut w = writer(&path)?;
            report.write_csv(&mut w)?;
            w.flush()?;
            println!("baseline mean {:.4} pu", report.mean.baseline.mean);
            for (k, name) in report.agents.iter().enumerate() {
                println!(
                    "{name}: mean {:.4} pu, reduction {:.1}%",
                    report.mean.agents[k].mean, report.reduction_pct[k]
                );
            }
            println!("report: {}", path.display());
        }
        Command::Simulate {
            theta_open,
            remanent,
            theta_close,
            sweep_close,
        } => {
            let req = SimulateRequest {
                theta_open,
                remanent: remanent.map(|v| [v[0], v[1], v[2]]),
                theta_close,
                sweep_close,
            };
            let out = harness::simulate(&cfg, &req)?;
            println!("remanent fluxes [Wb]: {:?}", out.remanent);
            let dir = cfg.paths.results_dir();
            if sweep_close {
                let path = dir.join("sweep_close.csv");
                let mut w = writer(&path)?;
                writeln!(w, "theta_close_deg,imax_pu")?;
                for (c, p) in out.sweep.iter().enumerate() {
                    writeln!(w, "{c},{p}")?;
                }
                w.flush()?;
                let best = out.sweep.iter().cloned().fold(f64::INFINITY, f64::min);
                println!("sweep: min {best:.4} pu, max {:.4} pu -> {}", out.i_max_pu, path.display());
            } else {
                let path = dir.join("waveform.csv");
                if let Some(wf) = &out.waveform {
                    fs::create_dir_all(&dir)?;
                    wf.save_csv(&path)?;
                }
                println!("i_max = {:.4} pu -> {}", out.i_max_pu, path.display());
            }
        }
        Command::Calibrate { write } => {
            let report = match harness::calibrate(&cfg.circuit, &cfg.calibration) {
                Ok(r) => r,
                Err(HarnessError::CalibrationFailed(best)) => {
                    eprintln!("calibration failed; best candidate: {best}");
                    return Err(HarnessError::CalibrationFailed(best));
                }
                Err(e) => return Err(e),
            };
            println!("{report}");
            let mut calibrated = cfg.clone();
            calibrated.circuit = report.config.clone();
            calibrated.paths = file_paths;
            let text = harness::annotate(&calibrated.to_toml(), &report, &cfg.calibration);
            let path = write.unwrap_or_else(|| cfg.paths.out.join("calibrated.toml"));
            if let Some(d) = path.parent() {
                fs::create_dir_all(d)?;
            }
            fs::write(&path, text)?;
            println!("calibrated configuration: {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! `windfreq`: simulate the DFIG farm, identify group models, and run
//! frequency-response experiments from the command line.

// Parameter checks are written as `!(x > 0.0)` on purpose so that NaN is
// rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use windfreq_core::experiments::{ModelKind, Policy};

use crate::commands::Output;
use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "windfreq", version, about = "Wind farm frequency regulation toolkit")]
struct Cli {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "WINDFREQ_OUT", default_value = "results")]
    out: PathBuf,

    /// Experiment seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Sdmd,
    Edmd,
}

impl From<Method> for ModelKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Sdmd => ModelKind::Sdmd,
            Method::Edmd => ModelKind::Edmd,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Open-loop turbine groups under MPPT with random reference offsets.
    Simulate {
        /// Simulated time (s).
        #[arg(long)]
        duration: Option<f64>,
        /// Track MPPT exactly instead of adding random offsets.
        #[arg(long)]
        no_excitation: bool,
    },
    /// Fit one lifted linear model per turbine group and save them.
    Identify {
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Fixed α for the physics-informed observables.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        rbf_centers: Option<usize>,
        /// Training history length (s).
        #[arg(long)]
        training_duration: Option<f64>,
    },
    /// Compare both identification methods over random wind scenarios.
    CompareId {
        #[arg(long)]
        scenarios: Option<usize>,
        /// Prediction horizon (control steps).
        #[arg(long)]
        horizon: Option<usize>,
        /// Training history length (s).
        #[arg(long)]
        training_duration: Option<f64>,
    },
    /// Closed-loop frequency response to the configured load step.
    Respond {
        /// mppt, droop or mpc.
        #[arg(long)]
        policy: Option<Policy>,
        /// Speed-droop ratio (p.u./Hz).
        #[arg(long)]
        kdf: Option<f64>,
        /// Pre-fitted model file, one per group in order (repeatable).
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Simulated time (s).
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Recompute metrics from a saved `frequency.csv`.
    Metrics {
        #[arg(long)]
        series: PathBuf,
        /// Control step (s) at which the rotor speeds are sampled.
        #[arg(long)]
        control_step: Option<f64>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    let out = Output::create(&cli.out)?;
    match cli.command {
        Command::Simulate { duration, no_excitation } => {
            if let Some(d) = duration {
                cfg.simulate.duration = d;
            }
            if no_excitation {
                cfg.simulate.excitation.amplitude = 0.0;
            }
            commands::simulate(&cfg, out)
        }
        Command::Identify { method, alpha, rbf_centers, training_duration } => {
            let m = &mut cfg.scenario.models;
            if let Some(k) = method {
                m.kind = k.into();
            }
            if alpha.is_some() {
                m.alpha = alpha;
            }
            if let Some(n) = rbf_centers {
                m.rbf_centers = n;
            }
            if let Some(d) = training_duration {
                m.training_duration = d;
            }
            commands::identify(&cfg, out)
        }
        Command::CompareId { scenarios, horizon, training_duration } => {
            let id = &mut cfg.identification;
            if let Some(n) = scenarios {
                id.scenarios = n;
            }
            if let Some(h) = horizon {
                id.horizon = h;
            }
            if let Some(d) = training_duration {
                id.training_duration = d;
            }
            commands::compare_id(&cfg, out)
        }
        Command::Respond { policy, kdf, models, duration } => {
            let sc = &mut cfg.scenario;
            if let Some(p) = policy {
                sc.policy = p;
            }
            if let Some(k) = kdf {
                sc.k_df = k;
            }
            if let Some(d) = duration {
                sc.duration = d;
            }
            commands::respond(&cfg, &models, out)
        }
        Command::Metrics { series, control_step } => {
            if let Some(ts) = control_step {
                cfg.scenario.control_step = ts;
            }
            commands::metrics(&cfg, &series, out)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `superchan`: simulate superchannel tomography experiments, reconstruct
//! superchannels from counts and analyze their initial correlations.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use superchan::tomography::Method;
use superchan::Interaction;

use config::{RunConfig, WeightMode};
use error::CliError;

#[derive(Parser)]
#[command(name = "superchan", version, about = "Superchannel simulation, tomography and correlation analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate coincidence counts for one experiment.
    Simulate {
        #[arg(long)]
        seed: Option<u64>,
        /// Emit expected counts instead of Poisson samples.
        #[arg(long)]
        exact: bool,
        #[arg(long, value_parser = parse_target)]
        target: Option<Interaction>,
        /// Tangle of the initial system-environment state.
        #[arg(long, allow_negative_numbers = true)]
        tau: Option<f64>,
        /// Trials per configuration.
        #[arg(long)]
        trials: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct the superchannel from a count dataset (CSV or JSON).
    Reconstruct {
        dataset: PathBuf,
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long, value_enum)]
        weights: Option<WeightMode>,
        /// Superchannel JSON to report the reconstruction error against.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// IC-norm, average state and map, and the F_prep surface of a superchannel.
    Analyze {
        superchannel: PathBuf,
        /// Target gate for the preparation fidelity.
        #[arg(long, value_parser = parse_target)]
        target: Option<Interaction>,
        /// Print the Choi matrix in the polarization-Pauli basis.
        #[arg(long)]
        pauli: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Ideal IC-norm as a function of the tangle.
    Sweep {
        /// Restrict to these targets (repeatable).
        #[arg(long, value_parser = parse_target)]
        target: Vec<Interaction>,
        /// Extra grid points; the measured tangles are always included.
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        tau: Vec<f64>,
        /// Purity weight of the initial state.
        #[arg(long, allow_negative_numbers = true)]
        v: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_target(s: &str) -> Result<Interaction, String> {
    s.parse().map_err(|e: superchan::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: superchan::Error| e.to_string())
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SUPERCHAN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SUPERCHAN_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Simulate { seed, exact, target, tau, trials, common } => {
            let mut cfg = load(&common)?;
            let spec = &mut cfg.experiment;
            spec.seed = seed.unwrap_or(spec.seed);
            spec.exact |= exact;
            spec.interaction = target.unwrap_or(spec.interaction);
            spec.trials_per_config = trials.unwrap_or(spec.trials_per_config);
            cfg.tau = tau.or(cfg.tau);
            commands::simulate(&cfg.finish()?).map(|_| ())
        }
        Command::Reconstruct { dataset, method, beta, weights, truth, common } => {
            let mut cfg = load(&common)?;
            cfg.method = method.unwrap_or(cfg.method);
            cfg.beta = beta.unwrap_or(cfg.beta);
            cfg.weights = weights.unwrap_or(cfg.weights);
            commands::reconstruct(&cfg.finish()?, &dataset, truth.as_deref().map(Path::new)).map(|_| ())
        }
        Command::Analyze { superchannel, target, pauli, common } => {
            let mut cfg = load(&common)?;
            cfg.experiment.interaction = target.unwrap_or(cfg.experiment.interaction);
            commands::analyze(&cfg.finish()?, &superchannel, pauli).map(|_| ())
        }
        Command::Sweep { target, tau, v, common } => {
            let mut cfg = load(&common)?;
            if !target.is_empty() {
                cfg.targets = target;
            }
            if !tau.is_empty() {
                cfg.taus = tau;
            }
            cfg.experiment.state_purity_v = v.unwrap_or(cfg.experiment.state_purity_v);
            commands::sweep(&cfg.finish()?).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noncoercive_cli::run::exit;
use noncoercive_cli::{fail_early, run, ExperimentConfig, Mode, RunError};

/// Thread count of the rayon pool.
const THREADS_VAR: &str = "NONCOERCIVE_THREADS";

#[derive(Parser)]
#[command(
    name = "noncoercive",
    version,
    about = "Quadratic-gradient elliptic problems with a non-coercive zero-order term"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the hypotheses and write the report.
    Check(Common),
    /// Local minimizer only.
    SolveMin(Common),
    /// Mountain-pass solution.
    SolveMp(Common),
    /// Minimizer and mountain-pass solution.
    SolveBoth(Common),
    /// Bracketed Newton solve of the general equation.
    SolveGeneral(Common),
    /// Manufactured-solution convergence study.
    Mms(Common),
    /// Property suites of the nonlinearity and the energy gradient.
    Props(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config; the shipped multiplicity fixture when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Acceptance threshold on the scaled residual.
    #[arg(long)]
    tol: Option<f64>,
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Self::Check(c) => (Mode::Check, c),
            Self::SolveMin(c) => (Mode::SolveMin, c),
            Self::SolveMp(c) => (Mode::SolveMp, c),
            Self::SolveBoth(c) => (Mode::SolveBoth, c),
            Self::SolveGeneral(c) => (Mode::SolveGeneral, c),
            Self::Mms(c) => (Mode::Mms, c),
            Self::Props(c) => (Mode::Props, c),
        }
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return;
    };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                log::warn!("cannot size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring {THREADS_VAR}={value}: expected a positive integer"),
    }
}

fn load(mode: Mode, args: &Common) -> Result<ExperimentConfig, RunError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::read(path)?,
        None => ExperimentConfig::multiplicity_fixture(),
    };
    config.mode = mode;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(tol) = args.tol {
        config.solver.tol = tol;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let (mode, args) = Cli::parse().command.split();
    let config = load(mode, &args);
    let out = args
        .out
        .clone()
        .or_else(|| config.as_ref().ok().and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = match config {
        Ok(config) => run(&config, &out),
        Err(e) => fail_early(mode, &out, e),
    };
    let m = &outcome.manifest;
    for (key, value) in &m.summary {
        println!("{key}: {value}");
    }
    match &outcome.error {
        None => println!("{mode}: ok, outputs in {}", out.display()),
        Some(e) => eprintln!(
            "{mode}: failed at stage {}: {}",
            m.failed_stage.as_deref().unwrap_or("unknown"),
            e.detail()
        ),
    }
    let code = outcome.exit_code();
    debug_assert!(code != exit::OK || outcome.error.is_none());
    ExitCode::from(code as u8)
}

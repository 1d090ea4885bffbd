//! Command-line driver for the experiment harness. Each subcommand runs
//! one experiment and writes a CSV table to `--out` (or stdout).
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
//! aborts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lrsense::harness::{
    run_ensemble_compare, run_injectivity, run_param_sweep, run_phase_transition,
    ExperimentConfig, ExperimentKind, SolverChoice, TuningMode,
};
use lrsense::Error;

#[derive(Parser)]
#[command(name = "lrsense", version, about = "Low-rank plus sparse matrix sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruction error and factor sparsity along a penalty-weight sweep
    ParamSweep(RunArgs),
    /// Tuned reconstruction vs the low-rank baseline across ensembles and m
    EnsembleCompare(RunArgs),
    /// Empirical success rates over a (sparsity, measurements) grid
    PhaseTransition(RunArgs),
    /// Quasi-isometry deviation statistics and envelope fits
    Injectivity(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file applied over the experiment defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed for deterministic trial derivation
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials per grid point
    #[arg(long)]
    trials: Option<usize>,
    /// Worker pool size (0 = one per core)
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver: am, palm, or baseline
    #[arg(long)]
    solver: Option<String>,
    /// Tuning metric: oracle or discrepancy
    #[arg(long)]
    tuning: Option<String>,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::ParamSweep(a) => (ExperimentKind::ParamSweep, a),
            Command::EnsembleCompare(a) => (ExperimentKind::EnsembleCompare, a),
            Command::PhaseTransition(a) => (ExperimentKind::PhaseTransition, a),
            Command::Injectivity(a) => (ExperimentKind::Injectivity, a),
        }
    }
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::defaults_for(kind);
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(solver) = &args.solver {
        cfg.solver = SolverChoice::from_tag(solver)?;
    }
    if let Some(tuning) = &args.tuning {
        cfg.tuning = TuningMode::from_tag(tuning)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<String, Error> {
    match kind {
        ExperimentKind::ParamSweep => run_param_sweep(cfg).map(|t| t.to_csv()),
        ExperimentKind::EnsembleCompare => run_ensemble_compare(cfg).map(|t| t.to_csv()),
        ExperimentKind::PhaseTransition => run_phase_transition(cfg).map(|t| t.to_csv()),
        ExperimentKind::Injectivity => run_injectivity(cfg).map(|t| t.to_csv()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();

    let cfg = match build_config(kind, &args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    match run(kind, &cfg) {
        Ok(csv) => {
            let result = match &cfg.out {
                Some(path) => std::fs::write(path, &csv),
                None => {
                    use std::io::Write as _;
                    std::io::stdout().write_all(csv.as_bytes())
                }
            };
            if let Err(e) = result {
                eprintln!("output error: {e}");
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("numerical abort: {e}");
            ExitCode::from(3)
        }
    }
}

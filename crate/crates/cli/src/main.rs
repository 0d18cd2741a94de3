//! `lkbo`: kinetic variable-sample consensus optimization from the command
//! line. See README.md for the shipped experiment configs.

mod build;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CmdError, Ctx};
use config::{
    render_key_help, Config, BENCHMARK_KEYS, COMMON_KEYS, DIAGNOSE_KEYS, MOMENTS_KEYS,
    OPTIMIZE_KEYS,
};

#[derive(Parser)]
#[command(
    name = "lkbo",
    about = "Derivative-free global optimization of expectation-valued objectives \
             with kinetic variable-sample consensus methods",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer realization and print the candidate minimizer.
    #[command(after_help = render_key_help(&[COMMON_KEYS, OPTIMIZE_KEYS]))]
    Optimize(CommonArgs),
    /// Run a benchmark grid and write table.csv plus per-run records.
    #[command(after_help = render_key_help(&[COMMON_KEYS, BENCHMARK_KEYS]))]
    Benchmark(CommonArgs),
    /// Emit empirical and ODE (m, V) phase traces on aligned time grids.
    #[command(after_help = render_key_help(&[COMMON_KEYS, MOMENTS_KEYS]))]
    Moments(CommonArgs),
    /// Print the convergence-condition report (C_alpha, mu, nu) as JSON.
    #[command(after_help = render_key_help(&[COMMON_KEYS, DIAGNOSE_KEYS]))]
    Diagnose(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Worker threads for benchmark runs (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Dotted-key config overrides, e.g. optimizer.sigma=0.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, fn(&Ctx) -> Result<(), CmdError>) = match &cli.command {
        Command::Optimize(a) => (a, commands::optimize::run),
        Command::Benchmark(a) => (a, commands::benchmark::run),
        Command::Moments(a) => (a, commands::moments::run),
        Command::Diagnose(a) => (a, commands::diagnose::run),
    };
    match prepare(args).and_then(|ctx| run(&ctx)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn prepare(args: &CommonArgs) -> Result<Ctx, CmdError> {
    if let Some(workers) = args.workers {
        if workers == 0 {
            return Err(CmdError::Config("--workers must be at least 1".into()));
        }
        // Ignore the error if a pool already exists (tests call this twice).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    let mut cfg = Config::from_file(&args.config)?;
    for assignment in &args.overrides {
        cfg.apply_override(assignment)?;
    }
    cfg.validate_keys()?;
    let seed = build::seed_from(&cfg, args.seed)?;
    Ctx::new(cfg, seed, args.output_dir.clone())
}

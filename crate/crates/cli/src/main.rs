//! fcache: plan functional caches for erasure-coded storage, simulate the
//! plans, and check the code and the latency bound behind them.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fcache_core::coding::DEFAULT_MDS_BUDGET;
use fcache_core::optimizer::{DEFAULT_BATCH_FRACTION, DEFAULT_EPSILON};

#[derive(Parser)]
#[command(name = "fcache", version, about = "Functional-cache planning for erasure-coded storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize cache content and scheduling for one workload bin
    Optimize(Optimize),
    /// Optimize across several cache capacities, warm-starting upward
    SweepCache(SweepCache),
    /// Run the discrete-event simulation of a plan
    Simulate(Simulate),
    /// Plan and simulate every bin of a multi-bin workload
    Evolve(Evolve),
    /// Decode-check the extended (n+k, k) erasure code
    VerifyMds(VerifyMds),
    /// Evaluate the latency bound of an existing plan
    Bound(Bound),
}

#[derive(Args)]
struct Optimize {
    /// Scenario JSON
    #[arg(long)]
    config: PathBuf,
    /// Workload bin index
    #[arg(long, default_value_t = 0)]
    bin: usize,
    /// Outer-loop convergence tolerance
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Fraction of still-fractional files rounded per pass
    #[arg(long, default_value_t = DEFAULT_BATCH_FRACTION)]
    batch_fraction: f64,
    /// Plan JSON to start from
    #[arg(long)]
    warm_start: Option<PathBuf>,
    /// Plan JSON to write; the trace CSV lands next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepCache {
    /// Scenario JSON
    #[arg(long)]
    config: PathBuf,
    /// Workload bin index
    #[arg(long, default_value_t = 0)]
    bin: usize,
    /// Comma-separated capacities in chunks, swept in ascending order
    #[arg(long, value_delimiter = ',', required = true)]
    cache_sizes: Vec<u64>,
    /// Sweep CSV to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Simulate {
    /// Scenario JSON
    #[arg(long)]
    config: PathBuf,
    /// Plan JSON from the optimizer
    #[arg(long)]
    plan: PathBuf,
    /// Workload bin index
    #[arg(long, default_value_t = 0)]
    bin: usize,
    /// Simulated time span
    #[arg(long)]
    duration: f64,
    /// Arrivals before this time are excluded from the statistics
    #[arg(long)]
    warmup: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Results CSV to write; the chunk-source CSV lands next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Evolve {
    /// Scenario JSON with at least two bins
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for per-bin plans, results, and the evolution CSV
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyMds {
    /// Server chunks per file
    #[arg(long)]
    n: usize,
    /// Data chunks per file
    #[arg(long)]
    k: usize,
    /// Exhaustive up to this many subsets, sampled beyond it
    #[arg(long, default_value_t = DEFAULT_MDS_BUDGET)]
    budget: u64,
    /// Seed for payloads and sampled subsets
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Bound {
    /// Scenario JSON
    #[arg(long)]
    config: PathBuf,
    /// Plan JSON from the optimizer
    #[arg(long)]
    plan: PathBuf,
    /// Workload bin index
    #[arg(long, default_value_t = 0)]
    bin: usize,
    /// Per-file bound CSV to write
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Optimize(args) => commands::cmd_optimize(args),
        Command::SweepCache(args) => commands::cmd_sweep_cache(args),
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Evolve(args) => commands::cmd_evolve(args),
        Command::VerifyMds(args) => commands::cmd_verify_mds(args),
        Command::Bound(args) => commands::cmd_bound(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code as u8)
        }
    }
}

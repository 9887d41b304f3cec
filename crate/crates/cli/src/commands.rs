//! The six subcommands. Each returns the process exit code through
//! `Failure`: 2 validation, 3 infeasible, 4 unstable, 5 failed MDS check.

use std::path::Path;

use anyhow::anyhow;
use fcache_core::coding::{make_generator, verify_mds};
use fcache_core::latency::{
    self, bound_terms, node_queue_stats, validate_plan, LatencyError, SchedulePlan,
};
use fcache_core::model::{validate_scenario, ScenarioConfig, WorkloadBin};
use fcache_core::optimizer::{self, OptimizeError, OptimizeOptions, OptimizerTrace};
use fcache_core::simulator::{self, FileResult, MultiBinOptions, SimOptions};

use crate::io::{self, BoundRow, ChunkRow, ConfigFile, EvolutionRow, PlanFile, ResultRow,
    SweepRow, TraceRow, TransitionRow, FORMAT_VERSION};
use crate::{Bound, Evolve, Optimize, Simulate, SweepCache, VerifyMds};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_UNSTABLE: i32 = 4;
pub const EXIT_MDS: i32 = 5;

pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: i32, error: anyhow::Error) -> Failure {
        Failure { code, error }
    }
}

/// Anything wrong with the inputs themselves.
fn validation(error: anyhow::Error) -> Failure {
    Failure::new(EXIT_VALIDATION, error)
}

fn optimize_failure(error: OptimizeError) -> Failure {
    let code = match &error {
        OptimizeError::Infeasible { .. } => EXIT_INFEASIBLE,
        OptimizeError::Latency(_) => EXIT_UNSTABLE,
    };
    Failure::new(code, error.into())
}

fn latency_failure(error: LatencyError) -> Failure {
    // the only latency error is an unstable queue
    Failure::new(EXIT_UNSTABLE, error.into())
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let file: ConfigFile = io::read_json(path).map_err(validation)?;
    io::check_version(file.version, path).map_err(validation)?;
    validate_scenario(&file.config).map_err(|e| validation(e.into()))?;
    Ok(file.config)
}

fn load_plan(path: &Path) -> Result<SchedulePlan, Failure> {
    let file: PlanFile = io::read_json(path).map_err(validation)?;
    io::check_version(file.version, path).map_err(validation)?;
    Ok(file.plan)
}

fn pick_bin(config: &ScenarioConfig, bin: usize) -> Result<&WorkloadBin, Failure> {
    config.bins.get(bin).ok_or_else(|| {
        validation(anyhow!(
            "bin {bin} out of range; the scenario has {} bins",
            config.bins.len()
        ))
    })
}

/// Full plan check; an overload is its own exit code, anything structural
/// is a validation failure.
fn check_plan(
    plan: &SchedulePlan,
    config: &ScenarioConfig,
    bin: &WorkloadBin,
) -> Result<(), Failure> {
    validate_plan(plan, config, bin).map_err(|e| {
        let overloaded = e.violations.iter().all(|v| v.contains("overloaded"));
        let code = if overloaded { EXIT_UNSTABLE } else { EXIT_VALIDATION };
        Failure::new(code, e.into())
    })
}

fn write_trace(path: &Path, trace: &OptimizerTrace) -> Result<(), Failure> {
    io::write_csv(
        path,
        trace.rows.iter().map(|row| TraceRow {
            iteration: row.iteration,
            objective: row.objective,
            fractional_files_remaining: row.fractional_files_remaining,
        }),
    )
    .map_err(validation)
}

fn write_results(path: &Path, files: &[FileResult]) -> Result<(), Failure> {
    io::write_csv(
        path,
        files.iter().map(|f| ResultRow {
            file_id: f.file_id,
            mean_latency: f.mean_latency,
            stderr: f.stderr,
            samples: f.samples,
        }),
    )
    .map_err(validation)
}

pub fn cmd_optimize(args: &Optimize) -> Result<(), Failure> {
    if !(args.epsilon > 0.0) {
        return Err(validation(anyhow!("--epsilon must be positive")));
    }
    if !(args.batch_fraction > 0.0 && args.batch_fraction <= 1.0) {
        return Err(validation(anyhow!("--batch-fraction must be in (0, 1]")));
    }
    io::check_parent(&args.out).map_err(validation)?;
    let config = load_config(&args.config)?;
    let bin = pick_bin(&config, args.bin)?;
    let warm = match &args.warm_start {
        Some(path) => {
            let plan = load_plan(path)?;
            check_plan(&plan, &config, bin)?;
            Some(plan)
        }
        None => None,
    };
    let options = OptimizeOptions {
        epsilon: args.epsilon,
        batch_fraction: args.batch_fraction,
        ..OptimizeOptions::default()
    };
    let (plan, trace) = optimizer::optimize(&config, args.bin, &options, warm.as_ref())
        .map_err(optimize_failure)?;

    io::write_json(
        &args.out,
        &PlanFile {
            version: FORMAT_VERSION,
            plan: plan.clone(),
        },
    )
    .map_err(validation)?;
    let trace_path = io::derived_csv(&args.out, "trace");
    write_trace(&trace_path, &trace)?;

    let cached: u64 = plan.d.iter().map(|&d| u64::from(d)).sum();
    println!(
        "objective {:.6} after {} outer iterations ({})",
        plan.objective,
        trace.outer_objectives.len(),
        if trace.converged { "converged" } else { "iteration cap" },
    );
    println!("cached chunks {cached} of capacity {}", config.cache_capacity);
    println!("plan -> {}", args.out.display());
    println!("trace -> {}", trace_path.display());
    Ok(())
}

pub fn cmd_sweep_cache(args: &SweepCache) -> Result<(), Failure> {
    if args.cache_sizes.is_empty() {
        return Err(validation(anyhow!("--cache-sizes needs at least one size")));
    }
    io::check_parent(&args.out).map_err(validation)?;
    let config = load_config(&args.config)?;
    pick_bin(&config, args.bin)?;

    // warm starts require ascending order
    let mut sizes = args.cache_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();

    let points = optimizer::sweep_cache(&config, args.bin, &sizes, &OptimizeOptions::default())
        .map_err(optimize_failure)?;
    io::write_csv(
        &args.out,
        points.iter().map(|p| SweepRow {
            cache_size: p.cache_size,
            objective: p.plan.objective,
        }),
    )
    .map_err(validation)?;

    for point in &points {
        println!("C={}: objective {:.6}", point.cache_size, point.plan.objective);
    }
    println!("sweep -> {}", args.out.display());
    Ok(())
}

pub fn cmd_simulate(args: &Simulate) -> Result<(), Failure> {
    if !(args.duration > 0.0) {
        return Err(validation(anyhow!("--duration must be positive")));
    }
    if !(0.0..args.duration).contains(&args.warmup) {
        return Err(validation(anyhow!("--warmup must be in [0, duration)")));
    }
    io::check_parent(&args.out).map_err(validation)?;
    let config = load_config(&args.config)?;
    let bin = pick_bin(&config, args.bin)?;
    let plan = load_plan(&args.plan)?;
    check_plan(&plan, &config, bin)?;

    let options = SimOptions {
        duration: args.duration,
        warmup: Some(args.warmup),
        seed: args.seed,
    };
    let report = simulator::run(&config, &plan, args.bin, &options)
        .map_err(|e| validation(e.into()))?;

    write_results(&args.out, &report.files)?;
    let chunks_path = io::derived_csv(&args.out, "chunks");
    io::write_csv(
        &chunks_path,
        report.chunk_slots.iter().map(|s| ChunkRow {
            slot: s.slot,
            chunks_from_cache: s.chunks_from_cache,
            chunks_from_storage: s.chunks_from_storage,
        }),
    )
    .map_err(validation)?;

    println!(
        "mean latency {:.6} (stderr {:.6}) over {} samples, {} completions",
        report.mean_latency, report.stderr, report.samples, report.completions
    );
    println!("results -> {}", args.out.display());
    println!("chunks -> {}", chunks_path.display());
    Ok(())
}

pub fn cmd_evolve(args: &Evolve) -> Result<(), Failure> {
    let config = load_config(&args.config)?;
    if config.bins.len() < 2 {
        return Err(validation(anyhow!(
            "evolve needs a scenario with at least 2 bins, found {}",
            config.bins.len()
        )));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| validation(anyhow::Error::new(e).context("creating --out-dir")))?;

    let mut plans: Vec<SchedulePlan> = Vec::with_capacity(config.bins.len());
    for bin_idx in 0..config.bins.len() {
        let warm = plans.last();
        let (plan, trace) =
            optimizer::optimize(&config, bin_idx, &OptimizeOptions::default(), warm)
                .map_err(optimize_failure)?;
        let path = args.out_dir.join(format!("plan-bin-{bin_idx}.json"));
        io::write_json(
            &path,
            &PlanFile {
                version: FORMAT_VERSION,
                plan: plan.clone(),
            },
        )
        .map_err(validation)?;
        println!(
            "bin {bin_idx}: objective {:.6} in {} outer iterations -> {}",
            plan.objective,
            trace.outer_objectives.len(),
            path.display()
        );
        plans.push(plan);
    }

    let evolution_path = args.out_dir.join("evolution.csv");
    io::write_csv(
        &evolution_path,
        plans.iter().enumerate().flat_map(|(bin_idx, plan)| {
            let bin_id = config.bins[bin_idx].bin_id;
            plan.d.iter().enumerate().map(move |(file_id, &d)| EvolutionRow {
                bin_id,
                file_id,
                d_i: d,
            })
        }),
    )
    .map_err(validation)?;

    let report = simulator::run_multibin(
        &config,
        &plans,
        &MultiBinOptions {
            seed: args.seed,
            ..MultiBinOptions::default()
        },
    )
    .map_err(|e| validation(e.into()))?;
    for bin in &report.bins {
        let path = args.out_dir.join(format!("results-bin-{}.csv", bin.bin_id));
        write_results(&path, &bin.files)?;
    }
    io::write_csv(
        args.out_dir.join("transitions.csv").as_path(),
        report.transitions.iter().map(|t| TransitionRow {
            time: t.time,
            bin_id: t.bin_id,
            file_id: t.file_id,
            from_d: t.from_d,
            to_d: t.to_d,
            deferred: t.deferred,
        }),
    )
    .map_err(validation)?;

    println!(
        "simulated {} completions over {} bins with seed {}",
        report.completions,
        report.bins.len(),
        args.seed
    );
    println!("evolution -> {}", evolution_path.display());
    println!("outputs -> {}", args.out_dir.display());
    Ok(())
}

pub fn cmd_verify_mds(args: &VerifyMds) -> Result<(), Failure> {
    let generator = make_generator(args.n, args.k)
        .map_err(|e| validation(e.into()))?;
    let report = verify_mds(&generator, args.budget, args.seed);
    println!(
        "subsets_checked: {} ({})",
        report.subsets_checked,
        if report.exhaustive { "exhaustive" } else { "sampled" }
    );
    println!("failures: {}", report.failure_count);
    for subset in &report.failures {
        println!("  failing subset {subset:?}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_MDS,
            anyhow!(
                "({}+{},{}) code failed on {} of {} subsets",
                args.n,
                args.k,
                args.k,
                report.failure_count,
                report.subsets_checked
            ),
        ))
    }
}

pub fn cmd_bound(args: &Bound) -> Result<(), Failure> {
    io::check_parent(&args.out).map_err(validation)?;
    let config = load_config(&args.config)?;
    let bin = pick_bin(&config, args.bin)?;
    let plan = load_plan(&args.plan)?;
    check_plan(&plan, &config, bin)?;

    let moments = config.service_moments();
    let stats = node_queue_stats(&plan.pi, &bin.arrival_rates, &moments)
        .map_err(latency_failure)?;
    let terms = bound_terms(&plan.pi, &plan.z, &stats);
    let aggregate = latency::objective(&plan, bin, &moments).map_err(latency_failure)?;

    io::write_csv(
        &args.out,
        (0..config.num_files()).map(|i| BoundRow {
            file_id: i,
            u_i: terms.u[i],
            z_i: plan.z[i],
            d_i: plan.d[i],
        }),
    )
    .map_err(validation)?;

    println!("aggregate {aggregate:.6}");
    println!("bounds -> {}", args.out.display());
    Ok(())
}

//! Discrete-event validation of the analytic bound: Poisson request
//! arrivals, per-request access sets drawn by systematic sampling from the
//! scheduling probabilities, FIFO single-server node queues, and fork-join
//! completion (a request finishes when its last storage chunk does; cached
//! chunks are free).

use crate::latency::SchedulePlan;
use crate::model::{lognormal_params, plugin_moments, ScenarioConfig, ServiceDistribution,
                   ServiceMoments};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use thiserror::Error;

/// Time-series resolution for the cache/storage chunk counters.
pub const CHUNK_SLOTS: usize = 20;
const BATCH_COUNT: usize = 20;
const DEFAULT_WARMUP_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scheduling row sums to {sum}, not an integer")]
    NonIntegralRow { sum: f64 },
    #[error("bad simulation setup: {detail}")]
    Config { detail: String },
}

/// Draws an access set by Madow's systematic sampling: one uniform offset u,
/// thresholds u, u+1, ..., and node j is picked when a threshold falls in
/// its cumulative-probability interval. Set size is exactly the (integer)
/// row sum and each node's inclusion probability is exactly its entry.
/// Returned indices are ascending.
pub fn sample_access_set(pi_row: &[f64], rng: &mut impl Rng) -> Result<Vec<usize>, SimError> {
    let sum: f64 = pi_row.iter().sum();
    let total = sum.round();
    if (sum - total).abs() > 1e-6 || total < 0.0 {
        return Err(SimError::NonIntegralRow { sum });
    }
    let total = total as usize;
    if total == 0 {
        return Ok(Vec::new());
    }
    let u: f64 = rng.gen::<f64>();
    let mut out = Vec::with_capacity(total);
    let mut cum = 0.0;
    let mut next = 0usize;
    let mut last_nonzero = 0usize;
    for (j, &p) in pi_row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_nonzero = j;
        cum += p;
        while next < total && u + (next as f64) < cum {
            out.push(j);
            next += 1;
        }
    }
    // cumulative rounding can leave the final threshold just past the end
    while next < total {
        out.push(last_nonzero);
        next += 1;
    }
    Ok(out)
}

/// Plug-in moments of observed service samples; needs at least two.
pub fn empirical_moments(samples: &[f64]) -> Option<ServiceMoments> {
    if samples.len() < 2 {
        return None;
    }
    Some(plugin_moments(samples))
}

/// Windowed arrival-rate estimator with a relative-change trigger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateEstimator {
    /// Window length in scenario time units.
    pub window: f64,
    /// Relative change between adjacent windows that counts as a shift.
    pub threshold: f64,
    /// Denominator floor so near-idle windows do not inflate ratios.
    pub floor_rate: f64,
    /// Windows on both sides of a candidate shift need this many events.
    pub min_events: usize,
}

impl RateEstimator {
    pub fn new(window: f64, threshold: f64, floor_rate: f64) -> RateEstimator {
        RateEstimator {
            window,
            threshold,
            floor_rate,
            min_events: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateWindow {
    pub start: f64,
    pub end: f64,
    pub events: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateScan {
    pub windows: Vec<RateWindow>,
    /// Indices of windows whose rate shifted relative to their predecessor.
    pub changes: Vec<usize>,
}

/// Splits [0, horizon) into consecutive windows and flags rate shifts.
/// Arrival timestamps must be sorted ascending.
pub fn estimate_rates(arrivals: &[f64], horizon: f64, estimator: &RateEstimator) -> RateScan {
    let mut windows = Vec::new();
    if estimator.window <= 0.0 || horizon <= 0.0 {
        return RateScan {
            windows,
            changes: Vec::new(),
        };
    }
    let mut cursor = 0usize;
    let mut start = 0.0;
    while start < horizon {
        let end = (start + estimator.window).min(horizon);
        let begin = cursor;
        while cursor < arrivals.len() && arrivals[cursor] < end {
            cursor += 1;
        }
        let events = cursor - begin;
        windows.push(RateWindow {
            start,
            end,
            events,
            rate: events as f64 / (end - start),
        });
        start = end;
    }
    let mut changes = Vec::new();
    for w in 1..windows.len() {
        let prev = &windows[w - 1];
        let now = &windows[w];
        if prev.events < estimator.min_events || now.events < estimator.min_events {
            continue;
        }
        let rel = (now.rate - prev.rate).abs() / prev.rate.max(estimator.floor_rate);
        if rel > estimator.threshold {
            changes.push(w);
        }
    }
    RateScan { windows, changes }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub duration: f64,
    /// Absolute warmup cut: arrivals before it are excluded from latency
    /// statistics. Defaults to 10% of the duration.
    pub warmup: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct MultiBinOptions {
    pub seed: u64,
    /// Per-bin warmup as a fraction of that bin's duration.
    pub warmup_fraction: f64,
}

impl Default for MultiBinOptions {
    fn default() -> Self {
        MultiBinOptions {
            seed: 0,
            warmup_fraction: DEFAULT_WARMUP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileResult {
    pub file_id: usize,
    pub mean_latency: f64,
    pub stderr: f64,
    /// Sample variance of latency, with a batch-means standard error.
    pub latency_variance: f64,
    pub variance_stderr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkSlot {
    pub slot: usize,
    pub chunks_from_cache: u64,
    pub chunks_from_storage: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub duration: f64,
    pub warmup: f64,
    pub seed: u64,
    pub files: Vec<FileResult>,
    pub mean_latency: f64,
    pub stderr: f64,
    pub samples: usize,
    pub completions: usize,
    pub chunk_slots: Vec<ChunkSlot>,
    pub node_utilization: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub time: f64,
    pub bin_id: usize,
    pub file_id: usize,
    pub from_d: u32,
    pub to_d: u32,
    /// True when the cache grew for this file: the switch waits for the
    /// file's first access in the new bin, which is still served with the
    /// old cached chunks.
    pub deferred: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSimReport {
    pub bin_id: usize,
    pub start: f64,
    pub end: f64,
    pub files: Vec<FileResult>,
    pub mean_latency: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiBinReport {
    pub seed: u64,
    pub bins: Vec<BinSimReport>,
    pub transitions: Vec<TransitionRecord>,
    pub completions: usize,
    pub chunk_slots: Vec<ChunkSlot>,
    pub node_utilization: Vec<f64>,
}

fn draw_service(dist: &ServiceDistribution, rng: &mut ChaCha8Rng) -> f64 {
    match dist {
        ServiceDistribution::Exponential { rate } => {
            rand_distr::Exp::new(*rate).unwrap().sample(rng)
        }
        ServiceDistribution::Deterministic { value } => *value,
        ServiceDistribution::ShiftedExponential { shift, rate } => {
            shift + rand_distr::Exp::new(*rate).unwrap().sample(rng)
        }
        ServiceDistribution::Lognormal { mean, variance } => {
            let (mu, sigma) = lognormal_params(*mean, *variance);
            rand_distr::LogNormal::new(mu, sigma).unwrap().sample(rng)
        }
        ServiceDistribution::Empirical { samples } => samples[rng.gen_range(0..samples.len())],
    }
}

fn draw_interarrival(rate: f64, rng: &mut ChaCha8Rng) -> f64 {
    rand_distr::Exp::new(rate).unwrap().sample(rng)
}

/// Heap entry; completions sort before arrivals at equal times.
#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    rank: u8,
    idx: usize,
    gen: u32,
}

const RANK_COMPLETION: u8 = 0;
const RANK_ARRIVAL: u8 = 1;

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.rank.cmp(&other.rank))
            .then(self.idx.cmp(&other.idx))
            .then(self.gen.cmp(&other.gen))
    }
}

struct Request {
    file: u32,
    arrival: f64,
    remaining: u32,
}

struct Requests {
    entries: Vec<Request>,
    free: Vec<usize>,
}

impl Requests {
    fn new() -> Requests {
        Requests {
            entries: Vec::new(),
            free: Vec::new(),
        }
    }
    fn alloc(&mut self, req: Request) -> usize {
        if let Some(idx) = self.free.pop() {
            self.entries[idx] = req;
            idx
        } else {
            self.entries.push(req);
            self.entries.len() - 1
        }
    }
    fn release(&mut self, idx: usize) {
        self.free.push(idx);
    }
}

struct NodeQueue {
    waiting: VecDeque<(usize, f64)>,
    current: Option<(usize, f64)>,
    busy: f64,
}

/// One stretch of simulated time governed by a single plan and rate vector.
struct Phase<'a> {
    bin_id: usize,
    start: f64,
    end: f64,
    warmup_end: f64,
    rates: &'a [f64],
    plan: &'a SchedulePlan,
}

/// Per-file sums and counts bucketed by arrival time, for batch-means
/// standard errors.
struct PhaseStats {
    count: Vec<[u64; BATCH_COUNT]>,
    sum: Vec<[f64; BATCH_COUNT]>,
    sq: Vec<[f64; BATCH_COUNT]>,
}

/// Spread of per-batch statistics as a standard error of their mean.
fn spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let k = values.len() as f64;
    let grand = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - grand) * (v - grand)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

impl PhaseStats {
    fn new(files: usize) -> PhaseStats {
        PhaseStats {
            count: vec![[0; BATCH_COUNT]; files],
            sum: vec![[0.0; BATCH_COUNT]; files],
            sq: vec![[0.0; BATCH_COUNT]; files],
        }
    }

    fn record(&mut self, file: usize, batch: usize, latency: f64) {
        self.count[file][batch] += 1;
        self.sum[file][batch] += latency;
        self.sq[file][batch] += latency * latency;
    }

    fn result_for(&self, rows: &[usize], file_id: usize) -> FileResult {
        let mut batch_count = [0u64; BATCH_COUNT];
        let mut batch_sum = [0.0f64; BATCH_COUNT];
        let mut batch_sq = [0.0f64; BATCH_COUNT];
        for &row in rows {
            for b in 0..BATCH_COUNT {
                batch_count[b] += self.count[row][b];
                batch_sum[b] += self.sum[row][b];
                batch_sq[b] += self.sq[row][b];
            }
        }
        let samples: u64 = batch_count.iter().sum();
        let total: f64 = batch_sum.iter().sum();
        let total_sq: f64 = batch_sq.iter().sum();
        if samples == 0 {
            return FileResult {
                file_id,
                mean_latency: 0.0,
                stderr: 0.0,
                latency_variance: 0.0,
                variance_stderr: 0.0,
                samples: 0,
            };
        }
        let mean = total / samples as f64;
        let means: Vec<f64> = (0..BATCH_COUNT)
            .filter(|&b| batch_count[b] > 0)
            .map(|b| batch_sum[b] / batch_count[b] as f64)
            .collect();
        let variance = if samples >= 2 {
            (total_sq - total * mean).max(0.0) / (samples - 1) as f64
        } else {
            0.0
        };
        let batch_vars: Vec<f64> = (0..BATCH_COUNT)
            .filter(|&b| batch_count[b] >= 2)
            .map(|b| {
                let n = batch_count[b] as f64;
                let m = batch_sum[b] / n;
                (batch_sq[b] - batch_sum[b] * m).max(0.0) / (n - 1.0)
            })
            .collect();
        FileResult {
            file_id,
            mean_latency: mean,
            stderr: spread(&means),
            latency_variance: variance,
            variance_stderr: spread(&batch_vars),
            samples: samples as usize,
        }
    }
}

struct EngineOutput {
    stats: Vec<PhaseStats>,
    transitions: Vec<TransitionRecord>,
    completions: usize,
    chunk_cache: [u64; CHUNK_SLOTS],
    chunk_storage: [u64; CHUNK_SLOTS],
    busy: Vec<f64>,
}

/// Scales a plan row up to a larger target sum, clipping at 1 and spreading
/// the excess over entries with headroom; falls back to uniform mass over
/// the placement when the row is all zero.
fn rescale_row(row: &[f64], placement: &[usize], target: f64) -> Vec<f64> {
    let mut out = vec![0.0; row.len()];
    let sum: f64 = row.iter().sum();
    if sum <= 1e-12 {
        for &j in placement {
            out[j] = target / placement.len() as f64;
        }
        return out;
    }
    let scale = target / sum;
    for &j in placement {
        out[j] = row[j] * scale;
    }
    for _ in 0..32 {
        let mut excess = 0.0;
        for &j in placement {
            if out[j] > 1.0 {
                excess += out[j] - 1.0;
                out[j] = 1.0;
            }
        }
        if excess <= 1e-12 {
            break;
        }
        let room: f64 = placement.iter().map(|&j| 1.0 - out[j]).sum();
        if room <= 0.0 {
            break;
        }
        for &j in placement {
            out[j] += excess * (1.0 - out[j]) / room;
        }
    }
    out
}

fn run_engine(
    config: &ScenarioConfig,
    phases: &[Phase],
    seed: u64,
) -> Result<EngineOutput, SimError> {
    let r = config.num_files();
    let m = config.num_nodes();
    let total_end = phases.last().map(|p| p.end).unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut heap: BinaryHeap<std::cmp::Reverse<Event>> = BinaryHeap::new();
    let mut nodes: Vec<NodeQueue> = (0..m)
        .map(|_| NodeQueue {
            waiting: VecDeque::new(),
            current: None,
            busy: 0.0,
        })
        .collect();
    let mut requests = Requests::new();
    let mut gen = vec![0u32; r];
    let mut d_eff: Vec<u32> = phases[0].plan.d.clone();
    let mut pending: Vec<Option<u32>> = vec![None; r];
    let mut out = EngineOutput {
        stats: phases.iter().map(|_| PhaseStats::new(r)).collect(),
        transitions: Vec::new(),
        completions: 0,
        chunk_cache: [0; CHUNK_SLOTS],
        chunk_storage: [0; CHUNK_SLOTS],
        busy: vec![0.0; m],
    };
    let mut phase_idx = 0usize;

    for i in 0..r {
        let rate = phases[0].rates[i];
        if rate > 0.0 {
            let t = draw_interarrival(rate, &mut rng);
            if t < total_end {
                heap.push(std::cmp::Reverse(Event {
                    time: t,
                    rank: RANK_ARRIVAL,
                    idx: i,
                    gen: 0,
                }));
            }
        }
    }

    let clip = |t: f64| t.min(total_end);
    let record = |out: &mut EngineOutput, phases: &[Phase], file: usize, arrival: f64,
                  latency: f64| {
        let p = match phases.iter().position(|p| arrival >= p.start && arrival < p.end) {
            Some(p) => p,
            None => return,
        };
        let phase = &phases[p];
        if arrival < phase.warmup_end {
            return;
        }
        let span = phase.end - phase.warmup_end;
        let batch = (((arrival - phase.warmup_end) / span * BATCH_COUNT as f64) as usize)
            .min(BATCH_COUNT - 1);
        out.stats[p].record(file, batch, latency);
    };

    loop {
        // cross any bin boundary that comes before the next event; each
        // crossing may schedule fresh arrivals, so re-peek every time
        while phase_idx + 1 < phases.len()
            && heap
                .peek()
                .map_or(true, |e| e.0.time >= phases[phase_idx + 1].start)
        {
            phase_idx += 1;
            let phase = &phases[phase_idx];
            for i in 0..r {
                let new_d = phase.plan.d[i];
                if new_d < d_eff[i] {
                    out.transitions.push(TransitionRecord {
                        time: phase.start,
                        bin_id: phase.bin_id,
                        file_id: i,
                        from_d: d_eff[i],
                        to_d: new_d,
                        deferred: false,
                    });
                    d_eff[i] = new_d;
                    pending[i] = None;
                } else if new_d == d_eff[i] {
                    pending[i] = None;
                } else {
                    pending[i] = Some(new_d);
                }
                // arrival processes restart with the new bin's rates
                gen[i] = gen[i].wrapping_add(1);
                let rate = phase.rates[i];
                if rate > 0.0 {
                    let t = phase.start + draw_interarrival(rate, &mut rng);
                    if t < total_end {
                        heap.push(std::cmp::Reverse(Event {
                            time: t,
                            rank: RANK_ARRIVAL,
                            idx: i,
                            gen: gen[i],
                        }));
                    }
                }
            }
        }

        let Some(std::cmp::Reverse(event)) = heap.pop() else {
            if phase_idx + 1 < phases.len() {
                continue;
            }
            break;
        };
        let now = event.time;

        if event.rank == RANK_ARRIVAL {
            let file = event.idx;
            if event.gen != gen[file] {
                continue;
            }
            let phase = &phases[phase_idx];
            let rate = phase.rates[file];
            let t = now + draw_interarrival(rate, &mut rng);
            if t < total_end {
                heap.push(std::cmp::Reverse(Event {
                    time: t,
                    rank: RANK_ARRIVAL,
                    idx: file,
                    gen: gen[file],
                }));
            }

            let k = config.files[file].k;
            let row_storage;
            let d_used = d_eff[file];
            let row: &[f64] = if let Some(upgrade) = pending[file].take() {
                // this request still runs on the old cache contents; the
                // new chunks are in place for the next one
                row_storage = rescale_row(
                    phase.plan.pi.row(file),
                    &config.files[file].placement,
                    k as f64 - d_used as f64,
                );
                out.transitions.push(TransitionRecord {
                    time: now,
                    bin_id: phase.bin_id,
                    file_id: file,
                    from_d: d_used,
                    to_d: upgrade,
                    deferred: true,
                });
                d_eff[file] = upgrade;
                &row_storage
            } else {
                phase.plan.pi.row(file)
            };

            let set = sample_access_set(row, &mut rng)?;
            let slot = ((now / total_end * CHUNK_SLOTS as f64) as usize).min(CHUNK_SLOTS - 1);
            out.chunk_cache[slot] += d_used as u64;
            out.chunk_storage[slot] += set.len() as u64;

            if set.is_empty() {
                out.completions += 1;
                record(&mut out, phases, file, now, 0.0);
                continue;
            }
            let req = requests.alloc(Request {
                file: file as u32,
                arrival: now,
                remaining: set.len() as u32,
            });
            for j in set {
                let service = draw_service(&config.nodes[j].service, &mut rng);
                let node = &mut nodes[j];
                if node.current.is_none() {
                    node.current = Some((req, now));
                    heap.push(std::cmp::Reverse(Event {
                        time: now + service,
                        rank: RANK_COMPLETION,
                        idx: j,
                        gen: 0,
                    }));
                } else {
                    node.waiting.push_back((req, service));
                }
            }
        } else {
            let j = event.idx;
            let (req, started) = nodes[j].current.take().expect("completion without service");
            nodes[j].busy += clip(now) - clip(started);
            if let Some((next_req, service)) = nodes[j].waiting.pop_front() {
                nodes[j].current = Some((next_req, now));
                heap.push(std::cmp::Reverse(Event {
                    time: now + service,
                    rank: RANK_COMPLETION,
                    idx: j,
                    gen: 0,
                }));
            }
            let entry = &mut requests.entries[req];
            entry.remaining -= 1;
            if entry.remaining == 0 {
                let file = entry.file as usize;
                let arrival = entry.arrival;
                requests.release(req);
                out.completions += 1;
                record(&mut out, phases, file, arrival, now - arrival);
            }
        }
    }

    for (j, node) in nodes.iter().enumerate() {
        out.busy[j] = node.busy;
    }
    Ok(out)
}

fn check_plan_shape(config: &ScenarioConfig, plan: &SchedulePlan) -> Result<(), SimError> {
    if plan.pi.rows() != config.num_files()
        || plan.pi.cols() != config.num_nodes()
        || plan.d.len() != config.num_files()
    {
        return Err(SimError::Config {
            detail: format!(
                "plan covers {} files x {} nodes, scenario has {} x {}",
                plan.pi.rows(),
                plan.pi.cols(),
                config.num_files(),
                config.num_nodes()
            ),
        });
    }
    Ok(())
}

fn chunk_slots(cache: &[u64; CHUNK_SLOTS], storage: &[u64; CHUNK_SLOTS]) -> Vec<ChunkSlot> {
    (0..CHUNK_SLOTS)
        .map(|slot| ChunkSlot {
            slot,
            chunks_from_cache: cache[slot],
            chunks_from_storage: storage[slot],
        })
        .collect()
}

/// Simulates one workload bin under a fixed plan.
pub fn run(
    config: &ScenarioConfig,
    plan: &SchedulePlan,
    bin_idx: usize,
    options: &SimOptions,
) -> Result<SimReport, SimError> {
    check_plan_shape(config, plan)?;
    if bin_idx >= config.bins.len() {
        return Err(SimError::Config {
            detail: format!("bin {bin_idx} out of range"),
        });
    }
    if !(options.duration > 0.0) {
        return Err(SimError::Config {
            detail: "duration must be positive".into(),
        });
    }
    let warmup = options
        .warmup
        .unwrap_or(DEFAULT_WARMUP_FRACTION * options.duration);
    if warmup < 0.0 || warmup >= options.duration {
        return Err(SimError::Config {
            detail: format!(
                "warmup {warmup} must sit inside the {} long run",
                options.duration
            ),
        });
    }
    let bin = &config.bins[bin_idx];
    let phases = [Phase {
        bin_id: bin.bin_id,
        start: 0.0,
        end: options.duration,
        warmup_end: warmup,
        rates: &bin.arrival_rates,
        plan,
    }];
    let engine = run_engine(config, &phases, options.seed)?;
    let stats = &engine.stats[0];
    let files: Vec<FileResult> = (0..config.num_files())
        .map(|i| stats.result_for(&[i], i))
        .collect();
    let all: Vec<usize> = (0..config.num_files()).collect();
    let overall = stats.result_for(&all, 0);
    Ok(SimReport {
        duration: options.duration,
        warmup,
        seed: options.seed,
        files,
        mean_latency: overall.mean_latency,
        stderr: overall.stderr,
        samples: overall.samples,
        completions: engine.completions,
        chunk_slots: chunk_slots(&engine.chunk_cache, &engine.chunk_storage),
        node_utilization: engine
            .busy
            .iter()
            .map(|b| b / options.duration)
            .collect(),
    })
}

/// Simulates the scenario's full bin sequence (durations from the config),
/// one plan per bin. Cache shrinks take effect at the boundary; cache growth
/// for a file waits for its first access in the new bin.
pub fn run_multibin(
    config: &ScenarioConfig,
    plans: &[SchedulePlan],
    options: &MultiBinOptions,
) -> Result<MultiBinReport, SimError> {
    if plans.len() != config.bins.len() {
        return Err(SimError::Config {
            detail: format!(
                "got {} plans for {} workload bins",
                plans.len(),
                config.bins.len()
            ),
        });
    }
    for plan in plans {
        check_plan_shape(config, plan)?;
    }
    if !(0.0..1.0).contains(&options.warmup_fraction) {
        return Err(SimError::Config {
            detail: format!("warmup fraction {} outside [0, 1)", options.warmup_fraction),
        });
    }
    let mut phases = Vec::with_capacity(config.bins.len());
    let mut start = 0.0;
    for (b, bin) in config.bins.iter().enumerate() {
        let end = start + bin.duration;
        phases.push(Phase {
            bin_id: bin.bin_id,
            start,
            end,
            warmup_end: start + options.warmup_fraction * bin.duration,
            rates: &bin.arrival_rates,
            plan: &plans[b],
        });
        start = end;
    }
    let total = start;
    let engine = run_engine(config, &phases, options.seed)?;
    let bins = phases
        .iter()
        .enumerate()
        .map(|(p, phase)| {
            let stats = &engine.stats[p];
            let files: Vec<FileResult> = (0..config.num_files())
                .map(|i| stats.result_for(&[i], i))
                .collect();
            let all: Vec<usize> = (0..config.num_files()).collect();
            let overall = stats.result_for(&all, 0);
            BinSimReport {
                bin_id: phase.bin_id,
                start: phase.start,
                end: phase.end,
                files,
                mean_latency: overall.mean_latency,
                stderr: overall.stderr,
                samples: overall.samples,
            }
        })
        .collect();
    Ok(MultiBinReport {
        seed: options.seed,
        bins,
        transitions: engine.transitions,
        completions: engine.completions,
        chunk_slots: chunk_slots(&engine.chunk_cache, &engine.chunk_storage),
        node_utilization: engine.busy.iter().map(|b| b / total).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::queue_mean;
    use crate::model::{FileSpec, Matrix, NodeSpec, WorkloadBin};

    fn config(
        rates: &[f64],
        files: Vec<(usize, usize, Vec<usize>)>,
        arrivals: Vec<f64>,
    ) -> ScenarioConfig {
        ScenarioConfig {
            time_unit: "seconds".into(),
            cache_capacity: 100,
            nodes: rates
                .iter()
                .enumerate()
                .map(|(node_id, &rate)| NodeSpec {
                    node_id,
                    service: ServiceDistribution::Exponential { rate },
                })
                .collect(),
            files: files
                .into_iter()
                .enumerate()
                .map(|(file_id, (n, k, placement))| FileSpec {
                    file_id,
                    n,
                    k,
                    placement,
                    size_bytes: 1 << 20,
                })
                .collect(),
            bins: vec![WorkloadBin {
                bin_id: 0,
                duration: 1000.0,
                arrival_rates: arrivals,
            }],
            notes: None,
        }
    }

    fn plan(rows: &[&[f64]], d: &[u32]) -> SchedulePlan {
        let mut pi = Matrix::zeros(rows.len(), rows[0].len());
        for (i, row) in rows.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                pi.set(i, j, p);
            }
        }
        SchedulePlan {
            pi,
            d: d.to_vec(),
            z: vec![0.0; rows.len()],
            objective: 0.0,
        }
    }

    #[test]
    fn madow_deterministic_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            sample_access_set(&[1.0, 0.0, 1.0], &mut rng).unwrap(),
            vec![0, 2]
        );
        assert!(sample_access_set(&[0.0, 0.0], &mut rng).unwrap().is_empty());
    }

    #[test]
    fn madow_rejects_fractional_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_access_set(&[0.5, 0.4], &mut rng),
            Err(SimError::NonIntegralRow { .. })
        ));
    }

    #[test]
    fn madow_exact_size_sorted_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let row = [0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        for _ in 0..1000 {
            let set = sample_access_set(&row, &mut rng).unwrap();
            assert_eq!(set.len(), 3);
            for w in set.windows(2) {
                assert!(w[0] < w[1]);
            }
            assert!(*set.last().unwrap() < 6);
        }
    }

    #[test]
    fn madow_marginals_match_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let row = [0.9, 0.55, 0.35, 0.2];
        let draws = 100_000usize;
        let mut hits = [0usize; 4];
        for _ in 0..draws {
            for j in sample_access_set(&row, &mut rng).unwrap() {
                hits[j] += 1;
            }
        }
        for j in 0..4 {
            let freq = hits[j] as f64 / draws as f64;
            let sigma = (row[j] * (1.0 - row[j]) / draws as f64).sqrt();
            assert!(
                (freq - row[j]).abs() <= 3.0 * sigma + 1e-9,
                "node {j}: freq {freq} vs p {}",
                row[j]
            );
        }
    }

    #[test]
    fn mm1_simulation_matches_pollaczek_khinchin() {
        let cfg = config(&[0.1], vec![(1, 1, vec![0])], vec![0.05]);
        let plan = plan(&[&[1.0]], &[0]);
        let report = run(
            &cfg,
            &plan,
            0,
            &SimOptions {
                duration: 400_000.0,
                warmup: None,
                seed: 11,
            },
        )
        .unwrap();
        let expect = queue_mean(&cfg.service_moments()[0], 0.05).unwrap();
        assert!(report.samples > 10_000);
        assert!(report.stderr > 0.0);
        assert!(
            (report.mean_latency - expect).abs() <= 3.0 * report.stderr,
            "sim {} vs theory {expect} (se {})",
            report.mean_latency,
            report.stderr
        );
    }

    #[test]
    fn fully_cached_requests_finish_instantly() {
        let cfg = config(&[0.1], vec![(1, 1, vec![0])], vec![0.05]);
        let plan = plan(&[&[0.0]], &[1]);
        let report = run(
            &cfg,
            &plan,
            0,
            &SimOptions {
                duration: 10_000.0,
                warmup: None,
                seed: 5,
            },
        )
        .unwrap();
        assert!(report.completions > 100);
        assert_eq!(report.mean_latency, 0.0);
        assert_eq!(report.stderr, 0.0);
        let storage: u64 = report.chunk_slots.iter().map(|s| s.chunks_from_storage).sum();
        let cache: u64 = report.chunk_slots.iter().map(|s| s.chunks_from_cache).sum();
        assert_eq!(storage, 0);
        assert_eq!(cache, report.completions as u64);
        assert!(report.node_utilization[0] == 0.0);
    }

    #[test]
    fn fork_join_maximum_of_two_services() {
        // nearly idle queues: latency approaches E[max of two exponentials]
        let cfg = config(&[1.0, 1.0], vec![(2, 2, vec![0, 1])], vec![0.005]);
        let plan = plan(&[&[1.0, 1.0]], &[0]);
        let report = run(
            &cfg,
            &plan,
            0,
            &SimOptions {
                duration: 2_000_000.0,
                warmup: None,
                seed: 7,
            },
        )
        .unwrap();
        assert!(report.samples > 5_000);
        assert!(
            (report.mean_latency - 1.5).abs() < 0.03,
            "mean {}",
            report.mean_latency
        );
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let cfg = config(
            &[0.2, 0.3, 0.25],
            vec![(3, 2, vec![0, 1, 2]), (2, 1, vec![1, 2])],
            vec![0.02, 0.03],
        );
        let p = plan(&[&[0.6, 0.7, 0.7], &[0.0, 0.5, 0.5]], &[0, 0]);
        let opts = SimOptions {
            duration: 20_000.0,
            warmup: Some(1000.0),
            seed: 99,
        };
        let a = run(&cfg, &p, 0, &opts).unwrap();
        let b = run(&cfg, &p, 0, &opts).unwrap();
        assert_eq!(a, b);
        let c = run(
            &cfg,
            &p,
            0,
            &SimOptions {
                seed: 100,
                ..opts
            },
        )
        .unwrap();
        assert_ne!(a.mean_latency.to_bits(), c.mean_latency.to_bits());
    }

    #[test]
    fn chunk_accounting_is_conserved() {
        let cfg = config(
            &[0.2, 0.3, 0.25],
            vec![(3, 2, vec![0, 1, 2])],
            vec![0.02],
        );
        let p = plan(&[&[0.4, 0.8, 0.8]], &[0]);
        let report = run(
            &cfg,
            &p,
            0,
            &SimOptions {
                duration: 50_000.0,
                warmup: Some(0.0),
                seed: 3,
            },
        )
        .unwrap();
        // every request draws exactly k - d storage chunks and d cached ones
        let storage: u64 = report.chunk_slots.iter().map(|s| s.chunks_from_storage).sum();
        let cache: u64 = report.chunk_slots.iter().map(|s| s.chunks_from_cache).sum();
        assert_eq!(storage, 2 * report.completions as u64);
        assert_eq!(cache, 0);
        assert_eq!(report.samples, report.completions);
        for &u in &report.node_utilization {
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn warmup_excludes_early_arrivals() {
        let cfg = config(&[0.1], vec![(1, 1, vec![0])], vec![0.05]);
        let p = plan(&[&[1.0]], &[0]);
        let with = run(
            &cfg,
            &p,
            0,
            &SimOptions {
                duration: 10_000.0,
                warmup: Some(5_000.0),
                seed: 13,
            },
        )
        .unwrap();
        let without = run(
            &cfg,
            &p,
            0,
            &SimOptions {
                duration: 10_000.0,
                warmup: Some(0.0),
                seed: 13,
            },
        )
        .unwrap();
        assert!(with.samples < without.samples);
        assert_eq!(with.completions, without.completions);
    }

    #[test]
    fn multibin_defers_cache_growth_until_first_access() {
        let mut cfg = config(
            &[2.0, 2.0, 2.0],
            vec![(3, 2, vec![0, 1, 2]), (3, 2, vec![0, 1, 2])],
            vec![0.05, 0.05],
        );
        cfg.bins = vec![
            WorkloadBin {
                bin_id: 0,
                duration: 500.0,
                arrival_rates: vec![0.05, 0.05],
            },
            WorkloadBin {
                bin_id: 1,
                duration: 500.0,
                arrival_rates: vec![0.05, 0.05],
            },
        ];
        let third = 2.0 / 3.0;
        let plans = [
            plan(&[&[0.0, 0.0, 0.0], &[third, third, third]], &[2, 0]),
            plan(&[&[third, third, third], &[0.0, 0.0, 0.0]], &[0, 2]),
        ];
        let report = run_multibin(&cfg, &plans, &MultiBinOptions { seed: 21, ..Default::default() })
            .unwrap();

        let down = report
            .transitions
            .iter()
            .find(|t| t.file_id == 0)
            .expect("file 0 transition");
        assert_eq!((down.from_d, down.to_d, down.deferred), (2, 0, false));
        assert_eq!(down.time, 500.0);

        let up = report
            .transitions
            .iter()
            .find(|t| t.file_id == 1)
            .expect("file 1 transition");
        assert_eq!((up.from_d, up.to_d, up.deferred), (0, 2, true));
        assert!(up.time > 500.0);

        // after its deferred upgrade, file 1 is fully cached for the rest of
        // bin 1; the warmup cut also hides the one slower upgrade request
        assert_eq!(report.bins[1].files[1].mean_latency, 0.0);
        assert!(report.bins[1].files[1].samples > 0);
        assert!(report.bins[1].files[0].mean_latency > 0.0);
        assert!(report.bins[0].files[0].mean_latency == 0.0);
        assert!(report.completions > 0);
    }

    #[test]
    fn rate_estimator_flags_a_step_change() {
        // deterministic arrivals: rate 5 before t = 50, rate 20 after
        let mut arrivals = Vec::new();
        let mut t = 0.0;
        while t < 50.0 {
            arrivals.push(t);
            t += 0.2;
        }
        while t < 100.0 {
            arrivals.push(t);
            t += 0.05;
        }
        let est = RateEstimator::new(10.0, 0.5, 1.0);
        let scan = estimate_rates(&arrivals, 100.0, &est);
        assert_eq!(scan.windows.len(), 10);
        assert_eq!(scan.changes, vec![5]);
        assert!((scan.windows[0].rate - 5.0).abs() < 0.3);
        assert!((scan.windows[9].rate - 20.0).abs() < 0.5);
    }

    #[test]
    fn rate_estimator_quiet_on_constant_rate() {
        let arrivals: Vec<f64> = (0..1000).map(|i| i as f64 * 0.1).collect();
        let est = RateEstimator::new(10.0, 0.5, 1.0);
        let scan = estimate_rates(&arrivals, 100.0, &est);
        assert!(scan.changes.is_empty());
        for w in &scan.windows {
            assert!((w.rate - 10.0).abs() < 0.2);
        }
    }

    #[test]
    fn rate_estimator_ignores_sparse_windows() {
        let est = RateEstimator::new(10.0, 0.5, 1.0);
        let scan = estimate_rates(&[], 100.0, &est);
        assert_eq!(scan.windows.len(), 10);
        assert!(scan.changes.is_empty());
        // two events per window never clears the min-events gate
        let sparse: Vec<f64> = (0..20).map(|i| i as f64 * 5.0).collect();
        let scan = estimate_rates(&sparse, 100.0, &est);
        assert!(scan.changes.is_empty());
    }

    #[test]
    fn empirical_moments_need_two_samples() {
        assert!(empirical_moments(&[]).is_none());
        assert!(empirical_moments(&[1.0]).is_none());
        let m = empirical_moments(&[1.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.variance, 1.0);
    }

    #[test]
    fn rescale_row_spreads_excess() {
        let row = [0.9, 0.9, 0.2];
        let out = rescale_row(&row, &[0, 1, 2], 2.5);
        let sum: f64 = out.iter().sum();
        assert!((sum - 2.5).abs() < 1e-9);
        assert!(out.iter().all(|&v| v <= 1.0 + 1e-12 && v >= 0.0));

        let zero = [0.0, 0.0, 0.0];
        let out = rescale_row(&zero, &[0, 1, 2], 2.0);
        for &v in &out {
            assert!((v - 2.0 / 3.0).abs() < 1e-12);
        }
    }
}

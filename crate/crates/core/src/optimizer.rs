//! Cache-content and scheduling optimizer for one workload bin.
//!
//! The continuous relaxation treats each file's cached-chunk count d_i
//! through its scheduling row sum (Σ_j π_ij = k_i − d_i) and alternates two
//! convex subproblems: exact per-file minimization over the auxiliary z, and
//! projected gradient descent over π. Integrality of the row sums is then
//! restored by pinning a batch of files per pass to rounded-up sums and
//! re-solving, so the remaining files absorb the displaced cache space.

use crate::latency::{
    objective_value, optimal_z, LatencyError, SchedulePlan, STABILITY_MARGIN,
};
use crate::model::{load_profile, Matrix, ScenarioConfig, ServiceMoments};
use thiserror::Error;

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_BATCH_FRACTION: f64 = 0.1;

const DYKSTRA_TOL: f64 = 1e-9;
const DYKSTRA_MAX_CYCLES: usize = 10_000;
const PGD_MAX_ITERS: usize = 500;
const PGD_REL_TOL: f64 = 1e-6;
const ARMIJO_SLOPE: f64 = 1e-4;
const STEP_CAP: f64 = 8.0;
const SNAP_TOL: f64 = 1e-7;
const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("infeasible: {reason}")]
    Infeasible { reason: String },
    #[error(transparent)]
    Latency(#[from] LatencyError),
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    /// Outer loop stops once an iteration improves the objective by no more
    /// than this (absolute, in time units).
    pub epsilon: f64,
    /// Fraction of still-fractional files pinned per rounding pass.
    pub batch_fraction: f64,
    pub max_outer: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            epsilon: DEFAULT_EPSILON,
            batch_fraction: DEFAULT_BATCH_FRACTION,
            max_outer: 100,
        }
    }
}

/// One convergence-log row: a gradient-descent pass followed by a snap.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub fractional_files_remaining: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace {
    pub rows: Vec<TraceRow>,
    /// Objective at the end of each outer iteration, after rounding.
    pub outer_objectives: Vec<f64>,
    pub inner_passes: Vec<usize>,
    pub converged: bool,
    pub epsilon: f64,
}

/// Static problem data shared by the subproblem solvers.
struct Instance {
    r: usize,
    m: usize,
    k: Vec<usize>,
    support: Vec<Vec<usize>>,
    rates: Vec<f64>,
    moments: Vec<ServiceMoments>,
    /// Per-node arrival-rate ceiling keeping ρ within the stability margin.
    caps: Vec<f64>,
    cache_capacity: u64,
    total_k: u64,
    /// Per node: the (row, λ) pairs contributing load there.
    col_rows: Vec<Vec<(usize, f64)>>,
    /// Nodes whose cap is reachable at all; the rest never constrain.
    active_cols: Vec<usize>,
    support_coords: f64,
}

impl Instance {
    fn build(config: &ScenarioConfig, bin_idx: usize) -> Instance {
        let r = config.num_files();
        let m = config.num_nodes();
        let moments = config.service_moments();
        let rates = config.bins[bin_idx].arrival_rates.clone();
        let support: Vec<Vec<usize>> =
            config.files.iter().map(|f| f.placement.clone()).collect();
        let caps: Vec<f64> = moments
            .iter()
            .map(|mom| mom.rate() * (1.0 - STABILITY_MARGIN) * (1.0 - 1e-9))
            .collect();
        let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (i, nodes) in support.iter().enumerate() {
            if rates[i] == 0.0 {
                continue;
            }
            for &j in nodes {
                col_rows[j].push((i, rates[i]));
            }
        }
        let active_cols = (0..m)
            .filter(|&j| {
                let worst: f64 = col_rows[j].iter().map(|&(_, lam)| lam).sum();
                worst > caps[j]
            })
            .collect();
        Instance {
            r,
            m,
            k: config.files.iter().map(|f| f.k).collect(),
            support_coords: support.iter().map(|s| s.len() as f64).sum(),
            support,
            rates,
            moments,
            caps,
            cache_capacity: config.cache_capacity,
            total_k: config.total_k(),
            col_rows,
            active_cols,
        }
    }

    fn capacity_floor(&self) -> f64 {
        self.total_k as f64 - self.cache_capacity as f64
    }
}

/// Row-sum interval per file; pinning collapses it to one integer.
struct RoundingBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
    pinned: Vec<bool>,
}

impl RoundingBounds {
    fn fresh(inst: &Instance) -> RoundingBounds {
        let lower = inst
            .k
            .iter()
            .map(|&k| (k as f64 - inst.cache_capacity as f64).max(0.0))
            .collect();
        RoundingBounds {
            lower,
            upper: inst.k.iter().map(|&k| k as f64).collect(),
            pinned: vec![false; inst.r],
        }
    }

    fn pin(&mut self, i: usize, target: f64) {
        self.lower[i] = target;
        self.upper[i] = target;
        self.pinned[i] = true;
    }
}

fn clip01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn sum_clipped(values: &[f64], tau: f64) -> f64 {
    values.iter().map(|&v| clip01(v - tau)).sum()
}

/// Solves Σ_j clip(v_j − τ, 0, 1) = target for τ. The sum is piecewise
/// linear and nonincreasing in τ with breakpoints at v_j and v_j − 1, so the
/// crossing segment is found by scanning the sorted breakpoints.
fn solve_tau(values: &[f64], target: f64) -> f64 {
    let mut bps: Vec<f64> = Vec::with_capacity(2 * values.len());
    for &v in values {
        bps.push(v - 1.0);
        bps.push(v);
    }
    bps.sort_by(f64::total_cmp);
    let first = bps[0];
    if sum_clipped(values, first) <= target {
        return first;
    }
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let sa = sum_clipped(values, a);
        let sb = sum_clipped(values, b);
        if sb <= target {
            if sa <= sb + f64::EPSILON {
                return a;
            }
            return a + (sa - target) * (b - a) / (sa - sb);
        }
    }
    *bps.last().unwrap()
}

/// Euclidean projection onto {x ∈ [0,1]^n : Σx ∈ [lo, hi]}, in place.
fn project_box_sum(values: &mut [f64], lo: f64, hi: f64) {
    let clipped_sum: f64 = values.iter().map(|&v| clip01(v)).sum();
    let tau = if clipped_sum > hi {
        solve_tau(values, hi)
    } else if clipped_sum < lo {
        solve_tau(values, lo)
    } else {
        0.0
    };
    for v in values.iter_mut() {
        *v = clip01(*v - tau);
    }
}

/// Row-set projection only: per-file [0,1] boxes with row-sum intervals.
fn project_rows_only(x: &mut Matrix, inst: &Instance, bounds: &RoundingBounds) {
    let mut scratch: Vec<f64> = Vec::with_capacity(inst.m);
    for i in 0..inst.r {
        scratch.clear();
        for &j in &inst.support[i] {
            scratch.push(x.get(i, j));
        }
        project_box_sum(&mut scratch, bounds.lower[i], bounds.upper[i]);
        for (idx, &j) in inst.support[i].iter().enumerate() {
            x.set(i, j, scratch[idx]);
        }
    }
}

/// Whether the capacity halfspace already follows from the row-sum lower
/// bounds, making it redundant in projections.
fn capacity_implied(inst: &Instance, bounds: &RoundingBounds) -> bool {
    let floor = inst.capacity_floor();
    floor <= 0.0 || bounds.lower.iter().sum::<f64>() >= floor - 1e-12
}

fn loads_satisfied(x: &Matrix, inst: &Instance) -> bool {
    inst.active_cols.iter().all(|&j| {
        let load: f64 = inst.col_rows[j]
            .iter()
            .map(|&(i, lam)| lam * x.get(i, j))
            .sum();
        load <= inst.caps[j] * (1.0 + 1e-8)
    })
}

/// Exact projection onto (row sets) ∩ (capacity halfspace). The halfspace has
/// identical coefficients on every support entry, so its dual is the scalar
/// θ ≥ 0 in x(θ) = Proj_rows(y + θ·1); the projected total is continuous and
/// non-decreasing in θ, and bisection finds the θ that lands on the floor.
fn project_rows_capacity(x: &mut Matrix, inst: &Instance, bounds: &RoundingBounds) {
    let floor = inst.capacity_floor();
    let projected_total = |y: &Matrix, theta: f64| -> f64 {
        let mut total = 0.0;
        for i in 0..inst.r {
            let mut c = 0.0;
            for &j in &inst.support[i] {
                c += (y.get(i, j) + theta).clamp(0.0, 1.0);
            }
            total += c.clamp(bounds.lower[i], bounds.upper[i]);
        }
        total
    };
    if !capacity_implied(inst, bounds) && projected_total(x, 0.0) < floor - 1e-12 {
        let mut hi = 1.0;
        while projected_total(x, hi) < floor && hi < 1e18 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if projected_total(x, mid) < floor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for i in 0..inst.r {
            for &j in &inst.support[i] {
                x.set(i, j, x.get(i, j) + hi);
            }
        }
    }
    project_rows_only(x, inst, bounds);
}

/// Projection onto the full constraint intersection: per-file boxes with
/// row-sum intervals, the aggregate cache-capacity halfspace, and per-node
/// stability halfspaces. Off-placement entries of x are expected to be
/// exactly zero and stay untouched.
///
/// The rows-and-capacity projection is exact on its own; when its result also
/// satisfies the stability caps it is the answer for the full intersection,
/// which covers nearly every call. Otherwise Dykstra's alternating
/// projections run over the non-redundant sets.
fn dykstra_project(x: &mut Matrix, inst: &Instance, bounds: &RoundingBounds) {
    let original = x.clone();
    project_rows_capacity(x, inst, bounds);
    if loads_satisfied(x, inst) {
        scrub_negative_zeros(x);
        return;
    }
    *x = original;

    let capacity_floor = inst.capacity_floor();
    let use_capacity = !capacity_implied(inst, bounds);
    let mut p_row = Matrix::zeros(inst.r, inst.m);
    let mut p_cap = Matrix::zeros(inst.r, inst.m);
    let mut p_col = Matrix::zeros(inst.r, inst.m);
    let mut scratch: Vec<f64> = Vec::with_capacity(inst.m);

    for _ in 0..DYKSTRA_MAX_CYCLES {
        let mut delta: f64 = 0.0;

        for i in 0..inst.r {
            scratch.clear();
            for &j in &inst.support[i] {
                scratch.push(x.get(i, j) + p_row.get(i, j));
            }
            let before: Vec<f64> = scratch.clone();
            project_box_sum(&mut scratch, bounds.lower[i], bounds.upper[i]);
            for (idx, &j) in inst.support[i].iter().enumerate() {
                let y = scratch[idx];
                p_row.set(i, j, before[idx] - y);
                delta = delta.max((y - x.get(i, j)).abs());
                x.set(i, j, y);
            }
        }

        if use_capacity {
            let mut total = 0.0;
            for i in 0..inst.r {
                for &j in &inst.support[i] {
                    total += x.get(i, j) + p_cap.get(i, j);
                }
            }
            let shift = if total < capacity_floor {
                (capacity_floor - total) / inst.support_coords
            } else {
                0.0
            };
            for i in 0..inst.r {
                for &j in &inst.support[i] {
                    let v = x.get(i, j) + p_cap.get(i, j);
                    let y = v + shift;
                    p_cap.set(i, j, v - y);
                    delta = delta.max((y - x.get(i, j)).abs());
                    x.set(i, j, y);
                }
            }
        }

        for &j in &inst.active_cols {
            let rows = &inst.col_rows[j];
            let mut load = 0.0;
            let mut norm = 0.0;
            for &(i, lam) in rows {
                load += lam * (x.get(i, j) + p_col.get(i, j));
                norm += lam * lam;
            }
            let scale = if load > inst.caps[j] {
                (load - inst.caps[j]) / norm
            } else {
                0.0
            };
            for &(i, lam) in rows {
                let v = x.get(i, j) + p_col.get(i, j);
                let y = v - lam * scale;
                p_col.set(i, j, v - y);
                delta = delta.max((y - x.get(i, j)).abs());
                x.set(i, j, y);
            }
        }

        if delta <= DYKSTRA_TOL {
            break;
        }
    }

    // Polish: land exactly on the row sets (box and row-sum interval), leaving
    // at most tolerance-level slack in the halfspaces. The feasibility check
    // accepts that slack; it does not accept box overshoot.
    project_rows_only(x, inst, bounds);
    scrub_negative_zeros(x);
}

fn scrub_negative_zeros(x: &mut Matrix) {
    for v in x.data_mut() {
        if v.abs() < 1e-15 {
            *v = 0.0;
        }
    }
}

/// First constraint violated beyond tolerance, if any. Dykstra cannot signal
/// an empty intersection itself; it simply fails to settle, and this check
/// turns that into a reportable reason.
fn feasibility_violation(
    x: &Matrix,
    inst: &Instance,
    bounds: &RoundingBounds,
) -> Option<String> {
    for i in 0..inst.r {
        let mut sum = 0.0;
        for (j, &v) in x.row(i).iter().enumerate() {
            if !inst.support[i].contains(&j) {
                if v != 0.0 {
                    return Some(format!("pi[{i}][{j}] off placement"));
                }
                continue;
            }
            if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                return Some(format!("pi[{i}][{j}] = {v} outside [0, 1]"));
            }
            sum += v;
        }
        if sum < bounds.lower[i] - FEAS_TOL || sum > bounds.upper[i] + FEAS_TOL {
            return Some(format!(
                "row {i} sum {sum} outside [{}, {}]",
                bounds.lower[i], bounds.upper[i]
            ));
        }
    }
    let total: f64 = x.data().iter().sum();
    let floor = inst.capacity_floor();
    // the total spans every support entry, so tolerance scales with the floor
    if total < floor - FEAS_TOL * floor.max(1.0) {
        return Some(format!(
            "cache capacity {} cannot hold the required {} chunks",
            inst.cache_capacity,
            inst.total_k as f64 - total
        ));
    }
    for j in 0..inst.m {
        let load: f64 = inst.col_rows[j]
            .iter()
            .map(|&(i, lam)| lam * x.get(i, j))
            .sum();
        if load > inst.caps[j] + FEAS_TOL * inst.caps[j].max(1.0) {
            return Some(format!(
                "node {j} load {load} exceeds its stability cap {}",
                inst.caps[j]
            ));
        }
    }
    None
}

/// Uniform starting plan: cache space split evenly (capacity remainder going
/// to the busiest files first), scheduling spread evenly over each file's
/// placement.
pub fn initial_plan(
    config: &ScenarioConfig,
    bin_idx: usize,
) -> Result<SchedulePlan, OptimizeError> {
    let inst = Instance::build(config, bin_idx);
    let per_file = if inst.r > 0 {
        inst.cache_capacity / inst.r as u64
    } else {
        0
    };
    let mut d: Vec<u64> = inst.k.iter().map(|&k| (k as u64).min(per_file)).collect();
    let mut leftover = inst.cache_capacity - d.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..inst.r).collect();
    order.sort_by(|&a, &b| inst.rates[b].total_cmp(&inst.rates[a]).then(a.cmp(&b)));
    while leftover > 0 {
        let mut progressed = false;
        for &i in &order {
            if leftover == 0 {
                break;
            }
            if d[i] < inst.k[i] as u64 {
                d[i] += 1;
                leftover -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    let mut pi = Matrix::zeros(inst.r, inst.m);
    for i in 0..inst.r {
        let share = (inst.k[i] as f64 - d[i] as f64) / inst.support[i].len() as f64;
        for &j in &inst.support[i] {
            pi.set(i, j, share);
        }
    }
    let profile = load_profile(&pi, &inst.rates, &inst.moments);
    for (j, &rho) in profile.rho.iter().enumerate() {
        if rho > 1.0 - STABILITY_MARGIN {
            return Err(OptimizeError::Infeasible {
                reason: format!(
                    "node {j} reaches utilization {rho:.4} under the uniform starting plan"
                ),
            });
        }
    }
    let z = vec![0.0; inst.r];
    let objective = objective_value(&pi, &z, &inst.rates, &inst.moments)?;
    Ok(SchedulePlan {
        pi,
        d: d.iter().map(|&v| v as u32).collect(),
        z,
        objective,
    })
}

/// Exact minimization over the auxiliary z at fixed π.
fn solve_prob_z(x: &Matrix, inst: &Instance) -> Result<(Vec<f64>, f64), OptimizeError> {
    let stats = crate::latency::node_queue_stats(x, &inst.rates, &inst.moments)?;
    let mut z = Vec::with_capacity(inst.r);
    let lam_hat: f64 = inst.rates.iter().sum();
    let mut objective = 0.0;
    for i in 0..inst.r {
        let (zi, bound) = optimal_z(x.row(i), &stats);
        z.push(zi);
        if lam_hat > 0.0 {
            objective += inst.rates[i] / lam_hat * bound;
        }
    }
    Ok((z, objective))
}

fn add_scaled_on_support(x: &mut Matrix, inst: &Instance, dir: &Matrix, alpha: f64) {
    for i in 0..inst.r {
        for &j in &inst.support[i] {
            x.set(i, j, x.get(i, j) + alpha * dir.get(i, j));
        }
    }
}

/// Projected gradient descent over π at fixed z, with an Armijo line search
/// along the projection arc direction. Returns the reached objective.
fn solve_prob_pi(
    x: &mut Matrix,
    z: &[f64],
    inst: &Instance,
    bounds: &RoundingBounds,
) -> Result<f64, OptimizeError> {
    dykstra_project(x, inst, bounds);
    if let Some(reason) = feasibility_violation(x, inst, bounds) {
        return Err(OptimizeError::Infeasible { reason });
    }
    let mut f = objective_value(x, z, &inst.rates, &inst.moments)?;
    let mut t: f64 = 1.0;
    for _ in 0..PGD_MAX_ITERS {
        let grad = crate::latency::objective_gradient_pi(x, z, &inst.rates, &inst.moments)?;
        // Cap the raw move so projection starts near the feasible set; every
        // coordinate lives in [0, 1], so steps far past that only waste
        // projection cycles without changing the arc direction meaningfully.
        let mut gmax: f64 = 0.0;
        for i in 0..inst.r {
            for &j in &inst.support[i] {
                gmax = gmax.max(grad.get(i, j).abs());
            }
        }
        let t_use = if gmax > 0.0 { t.min(STEP_CAP / gmax) } else { t };
        let mut candidate = x.clone();
        add_scaled_on_support(&mut candidate, inst, &grad, -t_use);
        dykstra_project(&mut candidate, inst, bounds);

        let mut dir = Matrix::zeros(inst.r, inst.m);
        let mut slope = 0.0;
        let mut max_step: f64 = 0.0;
        for i in 0..inst.r {
            for &j in &inst.support[i] {
                let d = candidate.get(i, j) - x.get(i, j);
                dir.set(i, j, d);
                slope += grad.get(i, j) * d;
                max_step = max_step.max(d.abs());
            }
        }
        if max_step <= 1e-12 || slope >= 0.0 {
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = x.clone();
            add_scaled_on_support(&mut trial, inst, &dir, alpha);
            let f_trial = objective_value(&trial, z, &inst.rates, &inst.moments)?;
            if f_trial <= f + ARMIJO_SLOPE * alpha * slope {
                accepted = Some((trial, f_trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, f_trial)) = accepted else {
            break;
        };
        *x = trial;
        let improved = f - f_trial;
        f = f_trial;
        if alpha >= 1.0 {
            t = (t_use * 2.0).min(1e12);
        } else {
            t = (t_use * 0.5).max(1e-9);
        }
        if improved <= PGD_REL_TOL * f.abs().max(1e-9) {
            break;
        }
    }
    Ok(f)
}

/// Pins every unpinned file whose row sum is already integral; returns how
/// many remain fractional.
fn snap_integral(x: &Matrix, inst: &Instance, bounds: &mut RoundingBounds) -> usize {
    let mut fractional = 0;
    for i in 0..inst.r {
        if bounds.pinned[i] {
            continue;
        }
        let sum: f64 = inst.support[i].iter().map(|&j| x.get(i, j)).sum();
        let nearest = sum.round();
        if (sum - nearest).abs() <= SNAP_TOL {
            bounds.pin(i, nearest);
        } else {
            fractional += 1;
        }
    }
    fractional
}

/// Pins the most-fractional batch of files to rounded-up row sums. Rounding
/// up shrinks d, so the pinned files can never oversubscribe the cache.
fn round_step(x: &Matrix, inst: &Instance, bounds: &mut RoundingBounds, batch_fraction: f64) {
    let mut frac: Vec<(usize, f64, f64)> = Vec::new();
    for i in 0..inst.r {
        if bounds.pinned[i] {
            continue;
        }
        let sum: f64 = inst.support[i].iter().map(|&j| x.get(i, j)).sum();
        frac.push((i, sum - sum.floor(), sum.ceil()));
    }
    if frac.is_empty() {
        return;
    }
    let batch = ((batch_fraction * frac.len() as f64).ceil() as usize).max(1);
    frac.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(i, _, target) in frac.iter().take(batch) {
        bounds.pin(i, target);
    }
}

/// Nudges each row onto its exact pinned integer sum, absorbing the floating
/// point residue into the entry with the most headroom.
fn finalize_rows(x: &mut Matrix, inst: &Instance, bounds: &RoundingBounds) {
    for v in x.data_mut() {
        *v = clip01(*v);
    }
    for i in 0..inst.r {
        let target = bounds.lower[i];
        let sum: f64 = inst.support[i].iter().map(|&j| x.get(i, j)).sum();
        let residue = target - sum;
        if residue == 0.0 {
            continue;
        }
        let mut best = inst.support[i][0];
        let mut best_room = f64::NEG_INFINITY;
        for &j in &inst.support[i] {
            let room = if residue > 0.0 {
                1.0 - x.get(i, j)
            } else {
                x.get(i, j)
            };
            if room > best_room {
                best_room = room;
                best = j;
            }
        }
        x.set(i, best, clip01(x.get(i, best) + residue));
    }
}

/// Runs the alternating optimization for one bin. A warm start reuses a
/// previous plan's π (for example from the preceding cache size in a sweep).
pub fn optimize(
    config: &ScenarioConfig,
    bin_idx: usize,
    options: &OptimizeOptions,
    warm: Option<&SchedulePlan>,
) -> Result<(SchedulePlan, OptimizerTrace), OptimizeError> {
    let inst = Instance::build(config, bin_idx);
    let mut x = match warm {
        Some(plan) => {
            if plan.pi.rows() != inst.r || plan.pi.cols() != inst.m {
                return Err(OptimizeError::Infeasible {
                    reason: format!(
                        "warm start is {}x{}, scenario needs {}x{}",
                        plan.pi.rows(),
                        plan.pi.cols(),
                        inst.r,
                        inst.m
                    ),
                });
            }
            plan.pi.clone()
        }
        None => initial_plan(config, bin_idx)?.pi,
    };

    let mut trace = OptimizerTrace {
        rows: Vec::new(),
        outer_objectives: Vec::new(),
        inner_passes: Vec::new(),
        converged: false,
        epsilon: options.epsilon,
    };
    let mut iteration = 0;
    let mut prev_obj = f64::INFINITY;
    let mut z = vec![0.0; inst.r];
    let mut baseline_pending = warm.is_some();

    for _ in 0..options.max_outer {
        let snapshot = x.clone();
        let mut bounds = RoundingBounds::fresh(&inst);
        dykstra_project(&mut x, &inst, &bounds);
        if let Some(reason) = feasibility_violation(&x, &inst, &bounds) {
            return Err(OptimizeError::Infeasible { reason });
        }
        let (z_entry, entry_obj) = solve_prob_z(&x, &inst)?;
        z = z_entry;
        if baseline_pending {
            // an already-feasible warm start is a valid fallback answer, so
            // its objective caps the accepted result
            let moved = snapshot
                .data()
                .iter()
                .zip(x.data())
                .any(|(a, b)| (a - b).abs() > 1e-9);
            if !moved {
                prev_obj = entry_obj;
            }
            baseline_pending = false;
        }

        let mut passes = 0;
        let mut first_fractional = 0;
        loop {
            solve_prob_pi(&mut x, &z, &inst, &bounds)?;
            passes += 1;
            let fractional = snap_integral(&x, &inst, &mut bounds);
            if passes == 1 {
                first_fractional = fractional;
            }
            if fractional == 0 {
                break;
            }
            round_step(&x, &inst, &mut bounds, options.batch_fraction);
            if passes > inst.r + 2 {
                return Err(OptimizeError::Infeasible {
                    reason: "rounding failed to terminate".into(),
                });
            }
        }
        finalize_rows(&mut x, &inst, &bounds);
        let (z_new, objective) = solve_prob_z(&x, &inst)?;
        trace.inner_passes.push(passes);

        if objective > prev_obj {
            // rounding landed worse than the previous iterate; keep that one
            x = snapshot;
            (z, _) = solve_prob_z(&x, &inst)?;
            trace.converged = true;
            break;
        }
        z = z_new;
        iteration += 1;
        trace.outer_objectives.push(objective);
        // one row per outer iteration: B^(c) and how many files the
        // continuous solve left fractional before rounding
        trace.rows.push(TraceRow {
            iteration,
            objective,
            fractional_files_remaining: first_fractional,
        });
        let improved = prev_obj - objective;
        prev_obj = objective;
        if improved <= options.epsilon || objective <= 1e-15 {
            trace.converged = true;
            break;
        }
    }

    let mut d = Vec::with_capacity(inst.r);
    for i in 0..inst.r {
        let sum: f64 = inst.support[i].iter().map(|&j| x.get(i, j)).sum();
        let cached = inst.k[i] as f64 - sum;
        debug_assert!((cached - cached.round()).abs() < FEAS_TOL);
        d.push(cached.round().max(0.0) as u32);
    }
    let objective = if prev_obj.is_finite() {
        prev_obj
    } else {
        solve_prob_z(&x, &inst)?.1
    };
    Ok((
        SchedulePlan {
            pi: x,
            d,
            z,
            objective,
        },
        trace,
    ))
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub cache_size: u64,
    pub plan: SchedulePlan,
    pub trace: OptimizerTrace,
}

/// Optimizes the same bin across several cache sizes, warm-starting each run
/// from the previous plan.
pub fn sweep_cache(
    config: &ScenarioConfig,
    bin_idx: usize,
    cache_sizes: &[u64],
    options: &OptimizeOptions,
) -> Result<Vec<SweepPoint>, OptimizeError> {
    let mut out = Vec::with_capacity(cache_sizes.len());
    let mut prev: Option<SchedulePlan> = None;
    for &cache_size in cache_sizes {
        let mut cfg = config.clone();
        cfg.cache_capacity = cache_size;
        let (plan, trace) = optimize(&cfg, bin_idx, options, prev.as_ref())?;
        prev = Some(plan.clone());
        out.push(SweepPoint {
            cache_size,
            plan,
            trace,
        });
    }
    Ok(out)
}

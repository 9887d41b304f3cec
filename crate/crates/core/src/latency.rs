//! Analytic latency machinery: M/G/1 queue moments per node, the per-file
//! retrieval-latency upper bound under probabilistic chunk scheduling, the
//! arrival-weighted objective over all files, and its gradient in π.
//!
//! The bound for file i with auxiliary z ≥ 0 is
//!   z + Σ_j (π_ij/2) [ (E[Q_j] − z) + sqrt((E[Q_j] − z)² + Var[Q_j]) ]
//! where Q_j is the chunk sojourn time (wait + service) at node j.

use crate::model::{load_profile, Matrix, ScenarioConfig, ServiceMoments, WorkloadBin};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Queue formulas are evaluated only while ρ stays below 1 by this margin.
pub const STABILITY_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum LatencyError {
    #[error("{} utilization {rho:.6} exceeds the stability limit {limit:.6}",
            node.map(|n| format!("node {n}:")).unwrap_or_default())]
    Unstable {
        node: Option<usize>,
        rho: f64,
        limit: f64,
    },
}

impl LatencyError {
    fn at_node(self, j: usize) -> LatencyError {
        match self {
            LatencyError::Unstable { rho, limit, .. } => LatencyError::Unstable {
                node: Some(j),
                rho,
                limit,
            },
        }
    }
}

/// Sojourn-time statistics of one node's queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueStats {
    /// E[Q]: mean chunk sojourn time.
    pub mean: f64,
    /// Var[Q].
    pub var: f64,
}

fn check_stable(moments: &ServiceMoments, lambda: f64) -> Result<f64, LatencyError> {
    let rho = lambda * moments.mean;
    let limit = 1.0 - STABILITY_MARGIN;
    if rho > limit {
        return Err(LatencyError::Unstable {
            node: None,
            rho,
            limit,
        });
    }
    Ok(rho)
}

/// Mean sojourn time E[Q] = 1/μ + Λ·Γ²/(2(1−ρ)).
pub fn queue_mean(moments: &ServiceMoments, lambda: f64) -> Result<f64, LatencyError> {
    let rho = check_stable(moments, lambda)?;
    Ok(moments.mean + lambda * moments.second_moment / (2.0 * (1.0 - rho)))
}

/// Sojourn variance Var[Q] = σ² + Λ·Γ̂³/(3(1−ρ)) + Λ²·Γ⁴/(4(1−ρ)²).
pub fn queue_var(moments: &ServiceMoments, lambda: f64) -> Result<f64, LatencyError> {
    let rho = check_stable(moments, lambda)?;
    let g2 = moments.second_moment;
    Ok(moments.variance
        + lambda * moments.third_moment / (3.0 * (1.0 - rho))
        + lambda * lambda * g2 * g2 / (4.0 * (1.0 - rho) * (1.0 - rho)))
}

pub fn queue_stats(moments: &ServiceMoments, lambda: f64) -> Result<QueueStats, LatencyError> {
    Ok(QueueStats {
        mean: queue_mean(moments, lambda)?,
        var: queue_var(moments, lambda)?,
    })
}

/// Queue stats for every node under the load induced by π; instability
/// errors name the offending node.
pub fn node_queue_stats(
    pi: &Matrix,
    arrival_rates: &[f64],
    moments: &[ServiceMoments],
) -> Result<Vec<QueueStats>, LatencyError> {
    let profile = load_profile(pi, arrival_rates, moments);
    profile
        .lambda
        .iter()
        .zip(moments)
        .enumerate()
        .map(|(j, (&lambda, mom))| queue_stats(mom, lambda).map_err(|e| e.at_node(j)))
        .collect()
}

fn safe_ratio(x: f64, denom: f64) -> f64 {
    if denom > 0.0 {
        x / denom
    } else {
        0.0
    }
}

/// The latency bound for one file at a fixed z.
pub fn file_bound_given_z(z: f64, pi_row: &[f64], stats: &[QueueStats]) -> f64 {
    let mut acc = z;
    for (&p, s) in pi_row.iter().zip(stats) {
        if p == 0.0 {
            continue;
        }
        let x = s.mean - z;
        acc += (p / 2.0) * (x + (x * x + s.var).sqrt());
    }
    acc
}

fn bound_derivative(z: f64, pi_row: &[f64], stats: &[QueueStats]) -> f64 {
    let mut acc = 1.0;
    for (&p, s) in pi_row.iter().zip(stats) {
        if p == 0.0 {
            continue;
        }
        let x = s.mean - z;
        let root = (x * x + s.var).sqrt();
        acc -= (p / 2.0) * (1.0 + safe_ratio(x, root));
    }
    acc
}

/// Minimizes `file_bound_given_z` over z ≥ 0; returns (z*, bound).
///
/// The derivative is nondecreasing in z, so bisection applies. The search
/// starts on [0, max E[Q] + sqrt(max Var)] and doubles the upper end when
/// the derivative is still negative there (possible once Σ_j π_j is large).
pub fn optimal_z(pi_row: &[f64], stats: &[QueueStats]) -> (f64, f64) {
    let mut max_mean: f64 = 0.0;
    let mut max_var: f64 = 0.0;
    let mut any = false;
    for (&p, s) in pi_row.iter().zip(stats) {
        if p == 0.0 {
            continue;
        }
        any = true;
        max_mean = max_mean.max(s.mean);
        max_var = max_var.max(s.var);
    }
    if !any {
        return (0.0, 0.0);
    }
    if bound_derivative(0.0, pi_row, stats) >= 0.0 {
        return (0.0, file_bound_given_z(0.0, pi_row, stats));
    }
    let mut hi = max_mean + max_var.sqrt();
    let mut doublings = 0;
    while bound_derivative(hi, pi_row, stats) < 0.0 && doublings < 80 {
        hi = (hi * 2.0).max(1.0);
        doublings += 1;
    }
    let mut lo = 0.0;
    let width_tol = 1e-12 * max_mean.max(1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let deriv = bound_derivative(mid, pi_row, stats);
        if deriv.abs() <= 1e-9 || hi - lo <= width_tol {
            return (mid, file_bound_given_z(mid, pi_row, stats));
        }
        if deriv < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    (z, file_bound_given_z(z, pi_row, stats))
}

/// Decision variables for one workload bin: scheduling probabilities,
/// integer cache chunks per file, per-file auxiliary z, and the achieved
/// weighted bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub pi: Matrix,
    pub d: Vec<u32>,
    pub z: Vec<f64>,
    pub objective: f64,
}

/// Plan violations, all of them.
#[derive(Debug, Error)]
#[error("invalid plan:\n  {}", violations.join("\n  "))]
pub struct InvalidPlan {
    pub violations: Vec<String>,
}

/// Checks every SchedulePlan invariant against its scenario and bin.
pub fn validate_plan(
    plan: &SchedulePlan,
    config: &ScenarioConfig,
    bin: &WorkloadBin,
) -> Result<(), InvalidPlan> {
    let mut v = Vec::new();
    let r = config.num_files();
    let m = config.num_nodes();
    if plan.pi.rows() != r || plan.pi.cols() != m {
        v.push(format!(
            "pi is {}x{}, expected {r}x{m}",
            plan.pi.rows(),
            plan.pi.cols()
        ));
    }
    if plan.d.len() != r {
        v.push(format!("d has {} entries, expected {r}", plan.d.len()));
    }
    if plan.z.len() != r {
        v.push(format!("z has {} entries, expected {r}", plan.z.len()));
    }
    if !v.is_empty() {
        return Err(InvalidPlan { violations: v });
    }
    for (i, file) in config.files.iter().enumerate() {
        let row = plan.pi.row(i);
        let on_placement = |j: usize| file.placement.contains(&j);
        for (j, &p) in row.iter().enumerate() {
            if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                v.push(format!("pi[{i}][{j}] = {p} outside [0, 1]"));
            }
            if p != 0.0 && !on_placement(j) {
                v.push(format!("pi[{i}][{j}] = {p} but node {j} is not in the placement"));
            }
        }
        let d = plan.d[i];
        if d as usize > file.k {
            v.push(format!("d[{i}] = {d} exceeds k = {}", file.k));
        }
        let sum: f64 = row.iter().sum();
        let expect = file.k as f64 - d as f64;
        if (sum - expect).abs() > 1e-6 {
            v.push(format!(
                "row {i} sums to {sum}, expected k - d = {expect}"
            ));
        }
        if plan.z[i] < 0.0 {
            v.push(format!("z[{i}] = {} negative", plan.z[i]));
        }
    }
    let total_d: u64 = plan.d.iter().map(|&d| d as u64).sum();
    if total_d > config.cache_capacity {
        v.push(format!(
            "cache overflow: sum d = {total_d} exceeds C = {}",
            config.cache_capacity
        ));
    }
    let profile = load_profile(&plan.pi, &bin.arrival_rates, &config.service_moments());
    for (j, &rho) in profile.rho.iter().enumerate() {
        if rho >= 1.0 {
            v.push(format!("node {j} overloaded: rho = {rho}"));
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(InvalidPlan { violations: v })
    }
}

/// Intermediate bound quantities, mostly for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTerms {
    /// X_ij = E[Q_j] − z_i.
    pub x: Matrix,
    /// Y_j = Var[Q_j].
    pub y: Vec<f64>,
    /// Per-file bound at the plan's z.
    pub u: Vec<f64>,
}

pub fn bound_terms(pi: &Matrix, z: &[f64], stats: &[QueueStats]) -> BoundTerms {
    let mut x = Matrix::zeros(pi.rows(), pi.cols());
    let mut u = Vec::with_capacity(pi.rows());
    for i in 0..pi.rows() {
        for (j, s) in stats.iter().enumerate() {
            x.set(i, j, s.mean - z[i]);
        }
        u.push(file_bound_given_z(z[i], pi.row(i), stats));
    }
    BoundTerms {
        x,
        y: stats.iter().map(|s| s.var).collect(),
        u,
    }
}

/// Arrival-weighted mean of the per-file bounds:
/// Σ_i (λ_i/λ̂) · bound_i. Zero traffic gives zero.
pub fn objective_value(
    pi: &Matrix,
    z: &[f64],
    arrival_rates: &[f64],
    moments: &[ServiceMoments],
) -> Result<f64, LatencyError> {
    let lam_hat: f64 = arrival_rates.iter().sum();
    if lam_hat == 0.0 {
        return Ok(0.0);
    }
    let stats = node_queue_stats(pi, arrival_rates, moments)?;
    let mut acc = 0.0;
    for (i, &rate) in arrival_rates.iter().enumerate() {
        if rate == 0.0 {
            continue;
        }
        acc += rate / lam_hat * file_bound_given_z(z[i], pi.row(i), &stats);
    }
    Ok(acc)
}

/// Objective of a complete plan.
pub fn objective(
    plan: &SchedulePlan,
    bin: &WorkloadBin,
    moments: &[ServiceMoments],
) -> Result<f64, LatencyError> {
    objective_value(&plan.pi, &plan.z, &bin.arrival_rates, moments)
}

/// Analytic gradient of `objective_value` with respect to every π entry.
///
/// Raising π_ab adds load Λ_b, which moves E[Q_b] and Var[Q_b] for every
/// file using node b; the returned entry combines that coupling with the
/// file's own direct term:
///   ∂F/∂π_ab = w_a (x_ab + r_ab)/2
///            + λ_a Σ_i w_i (π_ib/2) [E'_b (1 + x_ib/r_ib) + V'_b/(2 r_ib)]
/// with r = sqrt(x² + Var), E' = dE[Q]/dΛ, V' = dVar[Q]/dΛ.
pub fn objective_gradient_pi(
    pi: &Matrix,
    z: &[f64],
    arrival_rates: &[f64],
    moments: &[ServiceMoments],
) -> Result<Matrix, LatencyError> {
    let r = pi.rows();
    let m = pi.cols();
    let lam_hat: f64 = arrival_rates.iter().sum();
    let mut grad = Matrix::zeros(r, m);
    if lam_hat == 0.0 {
        return Ok(grad);
    }
    let profile = load_profile(pi, arrival_rates, moments);
    let limit = 1.0 - STABILITY_MARGIN;
    let mut stats = Vec::with_capacity(m);
    let mut de = Vec::with_capacity(m);
    let mut dv = Vec::with_capacity(m);
    for (j, mom) in moments.iter().enumerate() {
        let lambda = profile.lambda[j];
        let rho = profile.rho[j];
        if rho > limit {
            return Err(LatencyError::Unstable {
                node: Some(j),
                rho,
                limit,
            });
        }
        stats.push(queue_stats(mom, lambda)?);
        let one_minus = 1.0 - rho;
        let g2 = mom.second_moment;
        de.push(g2 / (2.0 * one_minus * one_minus));
        dv.push(
            mom.third_moment / (3.0 * one_minus * one_minus)
                + lambda * g2 * g2 / (2.0 * one_minus * one_minus * one_minus),
        );
    }

    // node aggregates K_b over all files sharing the node
    let mut k_agg = vec![0.0; m];
    for i in 0..r {
        let w = arrival_rates[i] / lam_hat;
        if w == 0.0 {
            continue;
        }
        for (b, &p) in pi.row(i).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let x = stats[b].mean - z[i];
            let root = (x * x + stats[b].var).sqrt();
            k_agg[b] += w * (p / 2.0)
                * (de[b] * (1.0 + safe_ratio(x, root)) + safe_ratio(dv[b], 2.0 * root));
        }
    }

    for a in 0..r {
        let w = arrival_rates[a] / lam_hat;
        if w == 0.0 {
            continue;
        }
        let row = grad.row_mut(a);
        for (b, slot) in row.iter_mut().enumerate() {
            let x = stats[b].mean - z[a];
            let root = (x * x + stats[b].var).sqrt();
            *slot = w * (x + root) / 2.0 + arrival_rates[a] * k_agg[b];
        }
    }
    Ok(grad)
}

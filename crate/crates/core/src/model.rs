//! Scenario data model: cluster nodes, erasure-coded files, per-bin
//! workloads, service-time moments, and derived load quantities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Service-time distribution of a storage node.
///
/// Time values are in the scenario's declared unit. `Lognormal` is
/// parameterized by its actual mean and variance, not by the underlying
/// normal parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ServiceDistribution {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    ShiftedExponential { shift: f64, rate: f64 },
    Lognormal { mean: f64, variance: f64 },
    Empirical { samples: Vec<f64> },
}

/// First three moments of a service-time distribution.
///
/// `second_moment` and `third_moment` are raw moments E[X^2] and E[X^3];
/// `variance` is kept alongside because the queueing formulas use both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceMoments {
    pub mean: f64,
    pub variance: f64,
    pub second_moment: f64,
    pub third_moment: f64,
}

impl ServiceMoments {
    /// Service rate mu = 1/mean.
    pub fn rate(&self) -> f64 {
        1.0 / self.mean
    }
}

/// Underlying normal (mu, sigma) matching a lognormal's actual mean and
/// variance.
pub(crate) fn lognormal_params(mean: f64, variance: f64) -> (f64, f64) {
    let sigma2 = (1.0 + variance / (mean * mean)).ln();
    (mean.ln() - sigma2 / 2.0, sigma2.sqrt())
}

/// Plug-in sample moments (denominator len, not len-1).
pub(crate) fn plugin_moments(samples: &[f64]) -> ServiceMoments {
    let len = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / len;
    let second = samples.iter().map(|x| x * x).sum::<f64>() / len;
    let third = samples.iter().map(|x| x * x * x).sum::<f64>() / len;
    ServiceMoments {
        mean,
        variance: second - mean * mean,
        second_moment: second,
        third_moment: third,
    }
}

impl ServiceDistribution {
    /// Closed-form moments for the parametric families, plug-in sample
    /// moments for `Empirical`. Parameters are assumed validated.
    pub fn moments(&self) -> ServiceMoments {
        match self {
            ServiceDistribution::Exponential { rate } => {
                let m = 1.0 / rate;
                ServiceMoments {
                    mean: m,
                    variance: m * m,
                    second_moment: 2.0 * m * m,
                    third_moment: 6.0 * m * m * m,
                }
            }
            ServiceDistribution::Deterministic { value } => ServiceMoments {
                mean: *value,
                variance: 0.0,
                second_moment: value * value,
                third_moment: value * value * value,
            },
            ServiceDistribution::ShiftedExponential { shift, rate } => {
                let e1 = 1.0 / rate;
                let e2 = 2.0 * e1 * e1;
                let e3 = 6.0 * e1 * e1 * e1;
                let mean = shift + e1;
                let second = shift * shift + 2.0 * shift * e1 + e2;
                let third =
                    shift * shift * shift + 3.0 * shift * shift * e1 + 3.0 * shift * e2 + e3;
                ServiceMoments {
                    mean,
                    variance: e1 * e1,
                    second_moment: second,
                    third_moment: third,
                }
            }
            ServiceDistribution::Lognormal { mean, variance } => {
                // underlying normal parameters matched to the target moments
                let (mu, sigma) = lognormal_params(*mean, *variance);
                let sigma2 = sigma * sigma;
                let second = (2.0 * mu + 2.0 * sigma2).exp();
                let third = (3.0 * mu + 4.5 * sigma2).exp();
                ServiceMoments {
                    mean: *mean,
                    variance: *variance,
                    second_moment: second,
                    third_moment: third,
                }
            }
            ServiceDistribution::Empirical { samples } => plugin_moments(samples),
        }
    }
}

/// One storage node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub node_id: usize,
    pub service: ServiceDistribution,
}

/// One erasure-coded file: (n, k) code, hosting nodes, and payload size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileSpec {
    pub file_id: usize,
    pub n: usize,
    pub k: usize,
    /// Hosting node ids, |placement| = n.
    pub placement: Vec<usize>,
    pub size_bytes: u64,
}

/// Stationary workload window: one arrival rate per file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadBin {
    pub bin_id: usize,
    pub duration: f64,
    pub arrival_rates: Vec<f64>,
}

fn default_time_unit() -> String {
    "seconds".to_owned()
}

/// Complete scenario: cluster, files, cache budget, and workload bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_time_unit")]
    pub time_unit: String,
    /// Cache budget C in chunks, shared by all files.
    pub cache_capacity: u64,
    pub nodes: Vec<NodeSpec>,
    pub files: Vec<FileSpec>,
    pub bins: Vec<WorkloadBin>,
    /// Free-form annotations; not interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl ScenarioConfig {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_files(&self) -> usize {
        self.files.len()
    }

    /// Moments of every node's service distribution, indexed by node_id.
    pub fn service_moments(&self) -> Vec<ServiceMoments> {
        self.nodes.iter().map(|n| n.service.moments()).collect()
    }

    /// Total chunks needed to cache every file entirely.
    pub fn total_k(&self) -> u64 {
        self.files.iter().map(|f| f.k as u64).sum()
    }
}

/// Scenario violations, all of them, in declaration order.
#[derive(Debug, Error)]
#[error("invalid scenario:\n  {}", violations.join("\n  "))]
pub struct InvalidScenario {
    pub violations: Vec<String>,
}

/// Checks every model invariant and returns the complete violation list.
pub fn validate_scenario(config: &ScenarioConfig) -> Result<(), InvalidScenario> {
    let mut v = Vec::new();
    if config.time_unit.is_empty() {
        v.push("time_unit: must be a non-empty declaration".to_owned());
    }
    if config.nodes.is_empty() {
        v.push("nodes: empty cluster".to_owned());
    }
    for (idx, node) in config.nodes.iter().enumerate() {
        if node.node_id != idx {
            v.push(format!(
                "nodes[{idx}]: node_id {} out of order; ids must be 0..m-1 in order",
                node.node_id
            ));
        }
        validate_service(&node.service, idx, &mut v);
    }
    let m = config.nodes.len();
    if config.files.is_empty() {
        v.push("files: empty file set".to_owned());
    }
    for (idx, f) in config.files.iter().enumerate() {
        let tag = format!("files[{idx}]");
        if f.file_id != idx {
            v.push(format!(
                "{tag}: file_id {} out of order; ids must be 0..r-1 in order",
                f.file_id
            ));
        }
        if f.k < 1 {
            v.push(format!("{tag}: k must be at least 1"));
        }
        if f.k > f.n {
            v.push(format!("{tag}: k exceeds n (k={}, n={})", f.k, f.n));
        }
        if f.n > m {
            v.push(format!("{tag}: n={} exceeds cluster size m={m}", f.n));
        }
        if f.n + f.k > 256 {
            v.push(format!(
                "{tag}: n+k={} exceeds the field-size limit 256",
                f.n + f.k
            ));
        }
        if f.placement.len() != f.n {
            v.push(format!(
                "{tag}: placement has {} nodes, expected n={}",
                f.placement.len(),
                f.n
            ));
        }
        let mut seen = f.placement.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != f.placement.len() {
            v.push(format!("{tag}: placement not distinct"));
        }
        if let Some(bad) = f.placement.iter().find(|&&j| j >= m) {
            v.push(format!("{tag}: placement refers to undeclared node {bad}"));
        }
        if f.size_bytes == 0 {
            v.push(format!("{tag}: size_bytes must be positive"));
        }
    }
    let r = config.files.len();
    if config.bins.is_empty() {
        v.push("bins: at least one workload bin required".to_owned());
    }
    for (idx, b) in config.bins.iter().enumerate() {
        let tag = format!("bins[{idx}]");
        if b.bin_id != idx {
            v.push(format!(
                "{tag}: bin_id {} out of order; ids must be 0..b-1 in order",
                b.bin_id
            ));
        }
        if !(b.duration > 0.0 && b.duration.is_finite()) {
            v.push(format!("{tag}: duration must be positive and finite"));
        }
        if b.arrival_rates.len() != r {
            v.push(format!(
                "{tag}: {} arrival rates for {r} files",
                b.arrival_rates.len()
            ));
        }
        for (i, &rate) in b.arrival_rates.iter().enumerate() {
            if !(rate >= 0.0 && rate.is_finite()) {
                v.push(format!("{tag}.arrival_rates[{i}]: must be finite and >= 0"));
            }
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(InvalidScenario { violations: v })
    }
}

fn validate_service(service: &ServiceDistribution, node: usize, v: &mut Vec<String>) {
    let tag = format!("nodes[{node}].service");
    let mut params_ok = true;
    let mut check = |ok: bool, msg: String| {
        if !ok {
            params_ok = false;
            v.push(msg);
        }
    };
    match service {
        ServiceDistribution::Exponential { rate } => {
            check(
                *rate > 0.0 && rate.is_finite(),
                format!("{tag}: rate must be positive and finite (got {rate})"),
            );
        }
        ServiceDistribution::Deterministic { value } => {
            check(
                *value > 0.0 && value.is_finite(),
                format!("{tag}: value must be positive and finite (got {value})"),
            );
        }
        ServiceDistribution::ShiftedExponential { shift, rate } => {
            check(
                *shift >= 0.0 && shift.is_finite(),
                format!("{tag}: shift must be finite and >= 0 (got {shift})"),
            );
            check(
                *rate > 0.0 && rate.is_finite(),
                format!("{tag}: rate must be positive and finite (got {rate})"),
            );
        }
        ServiceDistribution::Lognormal { mean, variance } => {
            check(
                *mean > 0.0 && mean.is_finite(),
                format!("{tag}: mean must be positive and finite (got {mean})"),
            );
            check(
                *variance > 0.0 && variance.is_finite(),
                format!("{tag}: variance must be positive and finite (got {variance})"),
            );
        }
        ServiceDistribution::Empirical { samples } => {
            check(!samples.is_empty(), format!("{tag}: empty sample list"));
            if samples.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                check(false, format!("{tag}: samples must all be positive and finite"));
            }
        }
    }
    if params_ok {
        let mom = service.moments();
        let finite = mom.mean.is_finite()
            && mom.variance.is_finite()
            && mom.second_moment.is_finite()
            && mom.third_moment.is_finite();
        if !finite {
            v.push(format!("{tag}: moments are not finite"));
        }
    }
}

/// Dense row-major f64 matrix; rows index files, columns index nodes.
///
/// Serializes as a plain nested array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Matrix, String> {
        if rows.is_empty() {
            return Err("matrix needs at least one row".to_owned());
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err("ragged matrix rows".to_owned());
        }
        let data = rows.into_iter().flatten().collect();
        Ok(Matrix {
            rows: 0,
            cols,
            data,
        }
        .with_row_count())
    }
}

impl Matrix {
    fn with_row_count(mut self) -> Matrix {
        self.rows = if self.cols == 0 {
            0
        } else {
            self.data.len() / self.cols
        };
        self
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Vec<Vec<f64>> {
        (0..m.rows).map(|i| m.row(i).to_vec()).collect()
    }
}

/// Per-node chunk arrival rates and utilizations induced by a π matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    /// Aggregate chunk arrival rate Λ_j = Σ_i λ_i π_{i,j}.
    pub lambda: Vec<f64>,
    /// Utilization ρ_j = Λ_j / μ_j.
    pub rho: Vec<f64>,
}

/// Computes per-node load from scheduling probabilities and file rates.
///
/// ρ ≥ 1 is reported as-is; the queueing formulas downstream reject it.
pub fn load_profile(pi: &Matrix, arrival_rates: &[f64], moments: &[ServiceMoments]) -> LoadProfile {
    assert_eq!(pi.rows(), arrival_rates.len(), "one π row per file");
    assert_eq!(pi.cols(), moments.len(), "one π column per node");
    let m = pi.cols();
    let mut lambda = vec![0.0; m];
    for (i, &rate) in arrival_rates.iter().enumerate() {
        if rate == 0.0 {
            continue;
        }
        for (j, &p) in pi.row(i).iter().enumerate() {
            lambda[j] += rate * p;
        }
    }
    let rho = lambda
        .iter()
        .zip(moments)
        .map(|(&l, m)| l * m.mean)
        .collect();
    LoadProfile { lambda, rho }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, LogNormal};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    #[test]
    fn exponential_moments_closed_form() {
        let m = ServiceDistribution::Exponential { rate: 0.1 }.moments();
        assert!(close(m.mean, 10.0, 1e-12));
        assert!(close(m.variance, 100.0, 1e-12));
        assert!(close(m.second_moment, 200.0, 1e-12));
        assert!(close(m.third_moment, 6000.0, 1e-12));
    }

    #[test]
    fn deterministic_moments() {
        let m = ServiceDistribution::Deterministic { value: 5.0 }.moments();
        assert_eq!(m.mean, 5.0);
        assert_eq!(m.variance, 0.0);
        assert_eq!(m.second_moment, 25.0);
        assert_eq!(m.third_moment, 125.0);
    }

    #[test]
    fn shifted_exponential_moments() {
        // shift 2, rate 0.5: E[X] = 4, Var = 4, E[X^2] = 20,
        // E[X^3] = 8 + 3*4*2 + 3*2*8 + 48 = 128
        let m = ServiceDistribution::ShiftedExponential {
            shift: 2.0,
            rate: 0.5,
        }
        .moments();
        assert!(close(m.mean, 4.0, 1e-12));
        assert!(close(m.variance, 4.0, 1e-12));
        assert!(close(m.second_moment, 20.0, 1e-12));
        assert!(close(m.third_moment, 128.0, 1e-12));
    }

    #[test]
    fn lognormal_second_moment_example() {
        let m = ServiceDistribution::Lognormal {
            mean: 355.08,
            variance: 1256.61,
        }
        .moments();
        assert!((m.second_moment - 127338.42).abs() / 127338.42 < 1e-6);
        assert_eq!(m.mean, 355.08);
        assert_eq!(m.variance, 1256.61);
    }

    #[test]
    fn empirical_moments_hand_values() {
        let m = ServiceDistribution::Empirical {
            samples: vec![1.0, 3.0],
        }
        .moments();
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.second_moment, 5.0);
        assert_eq!(m.third_moment, 14.0);
        assert_eq!(m.variance, 1.0);

        let same = ServiceDistribution::Empirical {
            samples: vec![5.0; 4],
        }
        .moments();
        assert_eq!(same.second_moment, 25.0);
        assert_eq!(same.third_moment, 125.0);
        assert_eq!(same.variance, 0.0);
    }

    // Monte Carlo cross-check of the closed forms: for each family compare
    // sample averages of X, X^2, X^3 against the analytic values within
    // 5 estimated standard errors.
    #[test]
    fn moments_match_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 400_000;
        let families = vec![
            ServiceDistribution::Exponential { rate: 0.1 },
            ServiceDistribution::ShiftedExponential {
                shift: 2.0,
                rate: 0.5,
            },
            ServiceDistribution::Lognormal {
                mean: 355.08,
                variance: 1256.61,
            },
        ];
        for dist in families {
            let samples: Vec<f64> = match &dist {
                ServiceDistribution::Exponential { rate } => {
                    let d = Exp::new(*rate).unwrap();
                    (0..n).map(|_| d.sample(&mut rng)).collect()
                }
                ServiceDistribution::ShiftedExponential { shift, rate } => {
                    let d = Exp::new(*rate).unwrap();
                    (0..n).map(|_| shift + d.sample(&mut rng)).collect()
                }
                ServiceDistribution::Lognormal { mean, variance } => {
                    let sigma2 = (1.0 + variance / (mean * mean)).ln();
                    let mu = mean.ln() - sigma2 / 2.0;
                    let d = LogNormal::new(mu, sigma2.sqrt()).unwrap();
                    (0..n).map(|_| d.sample(&mut rng)).collect()
                }
                _ => unreachable!(),
            };
            let expect = dist.moments();
            for (power, target) in [
                (1, expect.mean),
                (2, expect.second_moment),
                (3, expect.third_moment),
            ] {
                let powered: Vec<f64> = samples.iter().map(|x| x.powi(power)).collect();
                let mean = powered.iter().sum::<f64>() / n as f64;
                let var = powered.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
                let se = (var / n as f64).sqrt();
                assert!(
                    (mean - target).abs() <= 5.0 * se,
                    "{dist:?} moment {power}: sample {mean} vs analytic {target} (se {se})"
                );
            }
        }
    }

    #[test]
    fn second_moment_identity_and_power_mean() {
        let dists = vec![
            ServiceDistribution::Exponential { rate: 0.37 },
            ServiceDistribution::Deterministic { value: 3.2 },
            ServiceDistribution::ShiftedExponential {
                shift: 1.0,
                rate: 2.0,
            },
            ServiceDistribution::Lognormal {
                mean: 12.0,
                variance: 80.0,
            },
            ServiceDistribution::Empirical {
                samples: vec![0.5, 1.25, 9.0, 2.5],
            },
        ];
        for d in dists {
            let m = d.moments();
            let identity = m.variance + m.mean * m.mean;
            assert!(
                (m.second_moment - identity).abs() <= 1e-9 * identity.abs(),
                "{d:?}"
            );
            assert!(m.third_moment >= m.mean * m.second_moment - 1e-9, "{d:?}");
        }
    }

    fn tiny_config() -> ScenarioConfig {
        ScenarioConfig {
            time_unit: "seconds".to_owned(),
            cache_capacity: 2,
            nodes: vec![
                NodeSpec {
                    node_id: 0,
                    service: ServiceDistribution::Exponential { rate: 0.1 },
                },
                NodeSpec {
                    node_id: 1,
                    service: ServiceDistribution::Deterministic { value: 5.0 },
                },
            ],
            files: vec![FileSpec {
                file_id: 0,
                n: 2,
                k: 1,
                placement: vec![0, 1],
                size_bytes: 1024,
            }],
            bins: vec![WorkloadBin {
                bin_id: 0,
                duration: 100.0,
                arrival_rates: vec![0.05],
            }],
            notes: None,
        }
    }

    #[test]
    fn validate_accepts_wellformed() {
        assert!(validate_scenario(&tiny_config()).is_ok());
    }

    #[test]
    fn validate_collects_all_violations() {
        let mut config = tiny_config();
        config.files[0].k = 5; // k > n
        config.files[0].placement = vec![0, 0]; // duplicate
        config.bins[0].arrival_rates = vec![0.05, 0.01]; // wrong arity
        let err = validate_scenario(&config).unwrap_err();
        assert!(err.violations.iter().any(|v| v.contains("k exceeds n")));
        assert!(err
            .violations
            .iter()
            .any(|v| v.contains("placement not distinct")));
        assert!(err.violations.iter().any(|v| v.contains("arrival rates")));
        assert!(err.violations.len() >= 3);
    }

    #[test]
    fn validate_is_idempotent() {
        let mut config = tiny_config();
        config.files[0].size_bytes = 0;
        let first = validate_scenario(&config).unwrap_err().violations;
        let second = validate_scenario(&config).unwrap_err().violations;
        assert_eq!(first, second);
    }

    #[test]
    fn validate_rejects_bad_service_params() {
        let mut config = tiny_config();
        config.nodes[0].service = ServiceDistribution::Exponential { rate: 0.0 };
        config.nodes[1].service = ServiceDistribution::Empirical { samples: vec![] };
        let err = validate_scenario(&config).unwrap_err();
        assert_eq!(err.violations.len(), 2);
    }

    #[test]
    fn load_profile_single_term() {
        let mut pi = Matrix::zeros(1, 2);
        pi.set(0, 0, 1.0);
        let moments = vec![
            ServiceDistribution::Exponential { rate: 0.1 }.moments(),
            ServiceDistribution::Exponential { rate: 0.2 }.moments(),
        ];
        let profile = load_profile(&pi, &[0.05], &moments);
        assert!(close(profile.lambda[0], 0.05, 1e-12));
        assert!(close(profile.rho[0], 0.5, 1e-12));
        assert_eq!(profile.lambda[1], 0.0);
        assert_eq!(profile.rho[1], 0.0);
    }

    #[test]
    fn load_profile_zero_rates() {
        let pi = Matrix::zeros(3, 2);
        let moments = vec![ServiceDistribution::Exponential { rate: 1.0 }.moments(); 2];
        let profile = load_profile(&pi, &[0.0, 0.0, 0.0], &moments);
        assert!(profile.lambda.iter().all(|&l| l == 0.0));
        assert!(profile.rho.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn load_profile_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let moments = vec![ServiceDistribution::Exponential { rate: 0.25 }.moments(); 3];
        let rates = [0.2, 0.7];
        let mut a = Matrix::zeros(2, 3);
        let mut b = Matrix::zeros(2, 3);
        for v in a.data_mut() {
            *v = rng.gen::<f64>();
        }
        for v in b.data_mut() {
            *v = rng.gen::<f64>();
        }
        let t = 0.3;
        let mut mix = Matrix::zeros(2, 3);
        for idx in 0..6 {
            mix.data_mut()[idx] = t * a.data()[idx] + (1.0 - t) * b.data()[idx];
        }
        let pa = load_profile(&a, &rates, &moments);
        let pb = load_profile(&b, &rates, &moments);
        let pm = load_profile(&mix, &rates, &moments);
        for j in 0..3 {
            let expect = t * pa.lambda[j] + (1.0 - t) * pb.lambda[j];
            assert!(close(pm.lambda[j], expect, 1e-12));
            let expect_rho = t * pa.rho[j] + (1.0 - t) * pb.rho[j];
            assert!(close(pm.rho[j], expect_rho, 1e-12));
        }
    }

    #[test]
    fn matrix_serde_round_trip() {
        let mut m = Matrix::zeros(2, 3);
        m.set(0, 1, 0.5);
        m.set(1, 2, 0.25);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[0.0,0.5,0.0],[0.0,0.0,0.25]]");
        let back: Matrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        let ragged: Result<Matrix, _> = serde_json::from_str("[[1.0],[1.0,2.0]]");
        assert!(ragged.is_err());
    }
}

//! Bundled scenario builders: the heterogeneous 12-node benchmark, a
//! three-bin workload-evolution variant, a two-group placement variant, and
//! seeded random mini scenarios for simulator cross-checks.

use crate::model::{FileSpec, NodeSpec, ScenarioConfig, ServiceDistribution, WorkloadBin};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Service rates of the twelve benchmark nodes (three fast tiers, one slow
/// tier with an extra member).
pub const BENCHMARK_NODE_RATES: [f64; 12] = [
    0.1, 0.1, 0.1, 0.0909, 0.0909, 0.0667, 0.0667, 0.0769, 0.0769, 0.0588, 0.0588, 0.0588,
];

/// Per-file arrival rates repeat this five-value cycle by file id.
pub const BENCHMARK_ARRIVAL_CYCLE: [f64; 5] = [0.000156, 0.000156, 0.000125, 0.000167, 0.000104];

/// Request rates swept over the two hot files of the placement scenario.
pub const PLACEMENT_SWEEP_RATES: [f64; 6] = [
    0.000125, 0.00015625, 0.0001786, 0.0002083, 0.00025, 0.0002778,
];

const BENCHMARK_PLACEMENT_SEED: u64 = 11;
const EVOLUTION_PLACEMENT_SEED: u64 = 7;
const FILE_SIZE: u64 = 100 * 1024 * 1024;

fn benchmark_nodes() -> Vec<NodeSpec> {
    BENCHMARK_NODE_RATES
        .iter()
        .enumerate()
        .map(|(node_id, &rate)| NodeSpec {
            node_id,
            service: ServiceDistribution::Exponential { rate },
        })
        .collect()
}

fn random_placement(num_nodes: usize, width: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut placement = rand::seq::index::sample(rng, num_nodes, width).into_vec();
    placement.sort_unstable();
    placement
}

fn cycle_rates(num_files: usize) -> Vec<f64> {
    (0..num_files)
        .map(|i| BENCHMARK_ARRIVAL_CYCLE[i % BENCHMARK_ARRIVAL_CYCLE.len()])
        .collect()
}

/// The main benchmark: (7,4)-coded files over 12 heterogeneous nodes with
/// seeded random placements and cyclic arrival rates.
pub fn benchmark_scenario(num_files: usize, cache_capacity: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(BENCHMARK_PLACEMENT_SEED);
    let files = (0..num_files)
        .map(|file_id| FileSpec {
            file_id,
            n: 7,
            k: 4,
            placement: random_placement(12, 7, &mut rng),
            size_bytes: FILE_SIZE,
        })
        .collect();
    ScenarioConfig {
        time_unit: "seconds".into(),
        cache_capacity,
        nodes: benchmark_nodes(),
        files,
        bins: vec![WorkloadBin {
            bin_id: 0,
            duration: 100_000.0,
            arrival_rates: cycle_rates(num_files),
        }],
        notes: Some(format!(
            "12-node benchmark, {num_files} files, cyclic arrival rates"
        )),
    }
}

/// Ten files over three bins whose arrival rates shift hot spots around:
/// files 3 and 8 start hottest, files 4 and 9 heat up in bin 1, and files 1
/// and 6 spike in bin 2 while everything else returns to its initial rate.
pub fn evolution_scenario(cache_capacity: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(EVOLUTION_PLACEMENT_SEED);
    let files = (0..10)
        .map(|file_id| FileSpec {
            file_id,
            n: 7,
            k: 4,
            placement: random_placement(12, 7, &mut rng),
            size_bytes: FILE_SIZE,
        })
        .collect();

    let base = cycle_rates(10);
    let mut second = base.clone();
    for id in [3, 8] {
        second[id] -= 0.000125;
    }
    for id in [4, 9] {
        second[id] += 0.000125;
    }
    let mut third = base.clone();
    for id in [0, 5] {
        third[id] -= 0.000125;
    }
    for id in [1, 6] {
        third[id] += 0.00025;
    }

    ScenarioConfig {
        time_unit: "seconds".into(),
        cache_capacity,
        nodes: benchmark_nodes(),
        files,
        bins: [base, second, third]
            .into_iter()
            .enumerate()
            .map(|(bin_id, arrival_rates)| WorkloadBin {
                bin_id,
                duration: 200_000.0,
                arrival_rates,
            })
            .collect(),
        notes: Some("three-bin workload evolution over the 12-node benchmark".into()),
    }
}

/// Two placement groups sharing two nodes: files 0..=2 live on nodes 0..=6,
/// files 3..=9 on nodes 5..=11. Files 0 and 1 take `hot_rate`, typically
/// one of `PLACEMENT_SWEEP_RATES`.
pub fn placement_scenario(hot_rate: f64, cache_capacity: u64) -> ScenarioConfig {
    let files = (0..10)
        .map(|file_id| FileSpec {
            file_id,
            n: 7,
            k: 4,
            placement: if file_id < 3 {
                (0..7).collect()
            } else {
                (5..12).collect()
            },
            size_bytes: FILE_SIZE,
        })
        .collect();
    let mut rates = vec![0.0001042; 10];
    rates[0] = hot_rate;
    rates[1] = hot_rate;
    rates[2] = 0.0000962;
    rates[3] = 0.0000962;
    ScenarioConfig {
        time_unit: "seconds".into(),
        cache_capacity,
        nodes: benchmark_nodes(),
        files,
        bins: vec![WorkloadBin {
            bin_id: 0,
            duration: 100_000.0,
            arrival_rates: rates,
        }],
        notes: Some("two placement groups with a swept hot-file rate".into()),
    }
}

/// Small randomized scenario for simulator-versus-bound checks. Arrival
/// rates are scaled so every node stays below half utilization under any
/// schedule, keeping the optimizer and simulator comfortably stable.
pub fn random_small_scenario(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..=4);
    let nodes: Vec<NodeSpec> = (0..m)
        .map(|node_id| {
            let u: f64 = rng.gen();
            let service = match rng.gen_range(0..4) {
                0 => ServiceDistribution::Exponential { rate: 0.1 + 0.9 * u },
                1 => ServiceDistribution::Deterministic { value: 1.0 + 7.0 * u },
                2 => ServiceDistribution::ShiftedExponential {
                    shift: 0.5 + 1.5 * u,
                    rate: 0.3 + 0.7 * rng.gen::<f64>(),
                },
                _ => {
                    let mean = 2.0 + 8.0 * u;
                    ServiceDistribution::Lognormal {
                        mean,
                        variance: (0.2 + 1.8 * rng.gen::<f64>()) * mean * mean,
                    }
                }
            };
            NodeSpec { node_id, service }
        })
        .collect();
    let min_rate = nodes
        .iter()
        .map(|n| n.service.moments().rate())
        .fold(f64::INFINITY, f64::min);

    let r = rng.gen_range(1..=3);
    let files: Vec<FileSpec> = (0..r)
        .map(|file_id| {
            let n = rng.gen_range(2..=m);
            let k = rng.gen_range(1..=n);
            FileSpec {
                file_id,
                n,
                k,
                placement: random_placement(m, n, &mut rng),
                size_bytes: 4096 * rng.gen_range(1..=64),
            }
        })
        .collect();
    let total_k: u64 = files.iter().map(|f| f.k as u64).sum();
    let budget = 0.5 * min_rate;
    let arrival_rates: Vec<f64> = (0..r)
        .map(|_| budget / r as f64 * rng.gen_range(0.4..1.0))
        .collect();
    ScenarioConfig {
        time_unit: "seconds".into(),
        cache_capacity: rng.gen_range(0..=total_k),
        nodes,
        files,
        bins: vec![WorkloadBin {
            bin_id: 0,
            duration: 10_000.0,
            arrival_rates,
        }],
        notes: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_scenario;

    #[test]
    fn benchmark_aggregate_arrival_rate() {
        let config = benchmark_scenario(1000, 0);
        validate_scenario(&config).unwrap();
        let total: f64 = config.bins[0].arrival_rates.iter().sum();
        assert!((total - 0.1416).abs() < 1e-9, "total rate {total}");
        assert_eq!(config.num_nodes(), 12);
        assert_eq!(config.total_k(), 4000);
        for file in &config.files {
            assert_eq!(file.placement.len(), 7);
        }
        // placements differ between files
        assert_ne!(config.files[0].placement, config.files[1].placement);
    }

    #[test]
    fn benchmark_small_variant_scales_down() {
        let config = benchmark_scenario(100, 50);
        validate_scenario(&config).unwrap();
        assert_eq!(config.num_files(), 100);
        let total: f64 = config.bins[0].arrival_rates.iter().sum();
        assert!((total - 0.01416).abs() < 1e-9);
    }

    #[test]
    fn evolution_rates_shift_and_return() {
        let config = evolution_scenario(12);
        validate_scenario(&config).unwrap();
        assert_eq!(config.bins.len(), 3);
        let base = &config.bins[0].arrival_rates;
        let second = &config.bins[1].arrival_rates;
        let third = &config.bins[2].arrival_rates;
        assert!((base[3] - 0.000167).abs() < 1e-12);
        assert!((second[3] - 0.000042).abs() < 1e-12);
        assert!((second[4] - 0.000229).abs() < 1e-12);
        assert_eq!(second[0], base[0]);
        assert!((third[1] - 0.000406).abs() < 1e-12);
        assert!((third[0] - 0.000031).abs() < 1e-12);
        assert_eq!(third[3], base[3]);
        assert_eq!(third[8], base[8]);
        // files 3 and 8 are the hottest in the first bin
        let max = base.iter().cloned().fold(0.0, f64::max);
        assert_eq!(base[3], max);
        assert_eq!(base[8], max);
    }

    #[test]
    fn placement_groups_split_with_overlap() {
        let config = placement_scenario(PLACEMENT_SWEEP_RATES[0], 8);
        validate_scenario(&config).unwrap();
        for file in &config.files {
            if file.file_id < 3 {
                assert_eq!(file.placement, (0..7).collect::<Vec<_>>());
            } else {
                assert_eq!(file.placement, (5..12).collect::<Vec<_>>());
            }
        }
        let rates = &config.bins[0].arrival_rates;
        assert_eq!(rates[0], rates[1]);
        assert!((rates[2] - 0.0000962).abs() < 1e-12);
        assert!((rates[9] - 0.0001042).abs() < 1e-12);
    }

    #[test]
    fn random_scenarios_validate_and_stay_stable() {
        for seed in 0..50 {
            let config = random_small_scenario(seed);
            validate_scenario(&config)
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            let total: f64 = config.bins[0].arrival_rates.iter().sum();
            for node in &config.nodes {
                // even with every request hitting one node, ρ stays near 1/2
                assert!(total < 0.55 * node.service.moments().rate());
            }
        }
    }

    #[test]
    fn builders_are_deterministic() {
        assert_eq!(benchmark_scenario(50, 10), benchmark_scenario(50, 10));
        assert_eq!(evolution_scenario(12), evolution_scenario(12));
        assert_eq!(random_small_scenario(5), random_small_scenario(5));
    }
}

//! Shared instance builders for the benchmarks.

use carpool_core::generate::{instance_from_seed, GeneratorConfig};
use carpool_core::MarketInstance;

/// Generated instances with exactly `riders` riders, taken from consecutive seeds.
pub fn instances_with_riders(riders: usize, count: usize) -> Vec<MarketInstance> {
    let config = GeneratorConfig {
        max_riders: riders,
        ..GeneratorConfig::default()
    };
    (0..)
        .map(|seed| instance_from_seed(seed, &config))
        .filter(|inst| inst.num_riders() == riders)
        .take(count)
        .collect()
}

//! Random series-parallel markets with homogeneous disutility.

use num_traits::Signed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::network::{greedy_route_capacities, Edge, Network};
use crate::preferences::{MarketInstance, RiderPreferences};
use crate::rational::{frac, Rational};

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub max_edges: usize,
    pub max_riders: usize,
    pub max_car_capacity: usize,
    pub max_edge_capacity: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            max_edges: 8,
            max_riders: 6,
            max_car_capacity: 3,
            max_edge_capacity: 3,
        }
    }
}

fn random_rational(rng: &mut impl Rng, lo: i64, hi: i64, max_den: i64) -> Rational {
    let d = rng.gen_range(1..=max_den);
    frac(rng.gen_range(lo * d..=hi * d), d)
}

/// Grows a network from one `o -> d` edge by repeatedly subdividing an edge
/// or adding a parallel copy of it.
pub fn random_sp_network(rng: &mut impl Rng, config: &GeneratorConfig) -> Network {
    let target = rng.gen_range(1..=config.max_edges.max(1));
    let mut nodes = vec!["o".to_string(), "d".to_string()];
    let mut arcs: Vec<(usize, usize)> = vec![(0, 1)];
    while arcs.len() < target {
        let i = rng.gen_range(0..arcs.len());
        let (u, v) = arcs[i];
        if rng.gen_bool(0.5) {
            let w = nodes.len();
            nodes.push(format!("v{}", w - 1));
            arcs[i] = (u, w);
            arcs.insert(i + 1, (w, v));
        } else {
            arcs.insert(i + 1, (u, v));
        }
    }
    let edges = arcs
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| Edge {
            id: format!("e{}", i + 1),
            from: nodes[u].clone(),
            to: nodes[v].clone(),
            capacity: rng.gen_range(1..=config.max_edge_capacity.max(1)),
            travel_time: random_rational(rng, 1, 4, 2),
        })
        .collect();
    Network::new(nodes, "o", "d", edges).expect("generated networks are valid")
}

/// A random market whose best trip on some capacitated route is worth more
/// than zero. Disutility is `gamma(d) = c (d - 1)`, so the per-car cost
/// `d gamma(d) + delta d` is convex.
pub fn random_sp_instance(rng: &mut impl Rng, config: &GeneratorConfig) -> MarketInstance {
    loop {
        let network = random_sp_network(rng, config);
        let riders = rng.gen_range(1..=config.max_riders.max(1));
        let a = rng.gen_range(1..=config.max_car_capacity.max(1));
        let c = frac(rng.gen_range(0..=2), 2);
        let gamma: Vec<Rational> = (0..a)
            .map(|d| &c * Rational::from_integer(d.into()))
            .collect();
        let delta = frac(rng.gen_range(0..=2), 4);
        let riders = (0..riders)
            .map(|i| RiderPreferences {
                id: format!("r{}", i + 1),
                alpha: random_rational(rng, 1, 24, 3),
                beta: random_rational(rng, 0, 2, 2),
                gamma: gamma.clone(),
            })
            .collect();
        let instance =
            MarketInstance::new(network, riders, delta, a).expect("generated instances are valid");
        let k = greedy_route_capacities(instance.network());
        let everyone = instance.all_riders();
        if k.support()
            .into_iter()
            .any(|r| instance.augmented_value(&everyone, r).0.is_positive())
        {
            return instance;
        }
    }
}

/// Deterministic instance for `seed`.
pub fn instance_from_seed(seed: u64, config: &GeneratorConfig) -> MarketInstance {
    random_sp_instance(&mut ChaCha8Rng::seed_from_u64(seed), config)
}

use carpool_core::generate::{instance_from_seed, GeneratorConfig};
use carpool_core::network::greedy_route_capacities;
use carpool_core::oracle::*;
use carpool_core::rational::{frac, int};
use carpool_core::*;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Picks trips one candidate at a time from the full list, highest index
/// first, with no memoization.
fn enumerate_ip(instance: &MarketInstance) -> Rational {
    let routes = instance.network().routes().len();
    let mut candidates = Vec::new();
    for g in instance.feasible_groups(&instance.all_riders()) {
        for r in 0..routes {
            let v = instance.social_trip_value(&g, r).unwrap();
            if v.is_positive() {
                candidates.push((g.clone(), r, v));
            }
        }
    }
    let capacity: Vec<u64> = instance
        .network()
        .edges()
        .iter()
        .map(|e| e.capacity)
        .collect();
    fn go(
        i: usize,
        instance: &MarketInstance,
        cands: &[(Group, usize, Rational)],
        used: &mut Vec<bool>,
        cap: &mut Vec<u64>,
    ) -> Rational {
        if i == 0 {
            return Rational::zero();
        }
        let skip = go(i - 1, instance, cands, used, cap);
        let (g, r, v) = &cands[i - 1];
        let edges = &instance.network().route(*r).edges;
        if g.members().iter().any(|&m| used[m]) || edges.iter().any(|&e| cap[e] == 0) {
            return skip;
        }
        for &m in g.members() {
            used[m] = true;
        }
        for &e in edges {
            cap[e] -= 1;
        }
        let take = go(i - 1, instance, cands, used, cap) + v;
        for &m in g.members() {
            used[m] = false;
        }
        for &e in edges {
            cap[e] += 1;
        }
        skip.max(take)
    }
    go(
        candidates.len(),
        instance,
        &candidates,
        &mut vec![false; instance.num_riders()],
        &mut capacity.clone(),
    )
}

fn small_config() -> GeneratorConfig {
    GeneratorConfig {
        max_riders: 4,
        max_edges: 6,
        ..GeneratorConfig::default()
    }
}

/// Random riders with heterogeneous disutility on the Wheatstone network.
fn random_wheatstone(rng: &mut impl Rng) -> MarketInstance {
    let w = wheatstone_fixture();
    let riders = (0..rng.gen_range(1..=4))
        .map(|i| RiderPreferences {
            id: format!("r{i}"),
            alpha: frac(rng.gen_range(2..30), 2),
            beta: frac(rng.gen_range(0..3), 2),
            gamma: vec![int(0), int(rng.gen_range(0..3))],
        })
        .collect();
    w.with_riders(riders).unwrap()
}

#[test]
fn brute_force_agrees_with_second_enumerator() {
    for seed in 0..60 {
        let inst = instance_from_seed(seed, &small_config());
        let (trips, value) = brute_force_ip(&inst).unwrap();
        trips.check_feasible(&inst).unwrap();
        assert_eq!(trips.welfare(&inst).unwrap(), value);
        assert_eq!(value, enumerate_ip(&inst), "seed {seed}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let inst = random_wheatstone(&mut rng);
        assert_eq!(brute_force_ip(&inst).unwrap().1, enumerate_ip(&inst));
    }
}

#[test]
fn relaxation_bounds_integer_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let inst = random_wheatstone(&mut rng);
        let (x, lp) = solve_lp_relaxation(&inst).unwrap();
        assert!(x.is_feasible(&inst));
        assert_eq!(x.welfare(&inst).unwrap(), lp);
        assert!(lp >= brute_force_ip(&inst).unwrap().1);
    }
}

#[test]
fn sensitivity_decomposition() {
    for seed in 0..20 {
        let inst = instance_from_seed(seed, &small_config());
        let (x, _) = solve_lp_relaxation(&inst).unwrap();
        for gs in group_sensitivities(&x, &inst) {
            for (r, route) in inst.network().routes().iter().enumerate() {
                assert_eq!(
                    inst.social_trip_value(&gs.group, r).unwrap(),
                    &gs.base_value - &gs.sensitivity * &route.travel_time
                );
            }
        }
    }
}

#[test]
fn slack_single_route_is_integral() {
    let one = instance_from_seed(0, &small_config());
    let inst = MarketInstance::new(
        Network::new(
            vec!["o".into(), "d".into()],
            "o",
            "d",
            vec![Edge {
                id: "e1".into(),
                from: "o".into(),
                to: "d".into(),
                capacity: 10,
                travel_time: int(2),
            }],
        )
        .unwrap(),
        one.riders().to_vec(),
        one.delta().clone(),
        one.car_capacity(),
    )
    .unwrap();
    let (x, lp) = solve_lp_relaxation(&inst).unwrap();
    assert!(x.is_integral());
    assert_eq!(lp, brute_force_ip(&inst).unwrap().1);
}

fn parallel_pair() -> MarketInstance {
    let edge = |id: &str, t: i64| Edge {
        id: id.into(),
        from: "o".into(),
        to: "d".into(),
        capacity: 1,
        travel_time: int(t),
    };
    let network = Network::new(
        vec!["o".into(), "d".into()],
        "o",
        "d",
        vec![edge("e1", 1), edge("e2", 2)],
    )
    .unwrap();
    let riders = [(20, 5), (20, 3)]
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| RiderPreferences {
            id: format!("r{i}"),
            alpha: int(a),
            beta: int(b),
            gamma: vec![int(0)],
        })
        .collect();
    MarketInstance::new(network, riders, int(0), 1).unwrap()
}

#[test]
fn reassignment_puts_sensitive_groups_on_short_routes() {
    let inst = parallel_pair();
    let k = greedy_route_capacities(inst.network());
    // Wrong way round: the g = 5 rider on the slow route.
    let xhat = FractionalTripVector {
        entries: vec![
            (Group::new(vec![0]), 1, int(1)),
            (Group::new(vec![1]), 0, int(1)),
        ],
    };
    let y = reassign_to_subnetwork(&xhat, &k, &inst).unwrap();
    assert_eq!(
        y.entries,
        vec![
            (Group::new(vec![0]), 0, int(1)),
            (Group::new(vec![1]), 1, int(1))
        ]
    );
    assert!(y.is_feasible_for_capacities(&inst, &k));
    assert!(y.welfare(&inst).unwrap() > xhat.welfare(&inst).unwrap());
    // Already in place: unchanged.
    assert_eq!(reassign_to_subnetwork(&y, &k, &inst).unwrap(), y);
}

#[test]
fn reassignment_never_loses_welfare() {
    for seed in 0..60 {
        let inst = instance_from_seed(seed, &GeneratorConfig::default());
        let k = greedy_route_capacities(inst.network());
        let (x, lp) = solve_lp_relaxation(&inst).unwrap();
        let y = reassign_to_subnetwork(&x, &k, &inst).unwrap();
        assert!(y.is_feasible_for_capacities(&inst, &k), "seed {seed}");
        assert!(y.welfare(&inst).unwrap() >= lp, "seed {seed}");
        let (_, lpk) = solve_lp_relaxation_with_capacities(&inst, &k).unwrap();
        assert_eq!(lpk, lp, "seed {seed}");
    }
}

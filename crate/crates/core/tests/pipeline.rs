use carpool_core::equilibrium::*;
use carpool_core::generate::{instance_from_seed, GeneratorConfig};
use carpool_core::network::greedy_route_capacities;
use carpool_core::oracle::solve_lp_relaxation;
use carpool_core::rational::frac;
use carpool_core::vcg::*;
use carpool_core::Rational;

fn revenue(inst: &carpool_core::MarketInstance, tolls: &[Rational]) -> Rational {
    inst.network()
        .edges()
        .iter()
        .zip(tolls)
        .map(|(e, t)| t * Rational::from_integer(e.capacity.into()))
        .sum()
}

#[test]
fn strong_duality_and_route_tolls() {
    for seed in 0..40 {
        let inst = instance_from_seed(seed, &GeneratorConfig::default());
        let (_, lp) = solve_lp_relaxation(&inst).unwrap();
        let sep = solve_dual(&inst, DualMethod::Separation).unwrap();
        let all = solve_dual(&inst, DualMethod::Enumeration).unwrap();
        assert_eq!(sep.objective, lp, "seed {seed}");
        assert_eq!(all.objective, lp, "seed {seed}");
        assert_eq!(
            sep.utilities.iter().sum::<Rational>() + revenue(&inst, &sep.tolls),
            lp
        );

        let k = greedy_route_capacities(inst.network());
        let (_, lambda, objective) = solve_route_toll_dual(&inst, &k).unwrap();
        assert_eq!(objective, lp, "seed {seed}");
        assert!(lambda
            .iter()
            .enumerate()
            .all(|(r, l)| k.get(r) > 0 || *l == Rational::from_integer(0.into())));
    }
}

#[test]
fn solved_outcomes_verify() {
    for seed in 0..60 {
        let inst = instance_from_seed(seed, &GeneratorConfig::default());
        let sol = solve_market(&inst, &SolveOptions::default()).unwrap();
        let Solution::Equilibrium {
            outcome,
            report,
            utilities,
        } = sol.solution
        else {
            panic!("seed {seed}: no equilibrium on a series-parallel market")
        };
        assert!(report.all_hold(), "seed {seed}: {:?}", report.violations);
        assert_eq!(verify_equilibrium(&outcome, &inst).unwrap(), report);
        assert_eq!(outcome.utilities(&inst).unwrap(), utilities);
        assert_eq!(sol.diagnostics.lp_optimum, sol.diagnostics.ip_optimum);
        let again = solve_market(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(again.diagnostics, sol.diagnostics);

        let enumerated = SolveOptions {
            dual: DualMethod::Enumeration,
            ..SolveOptions::default()
        };
        let Solution::Equilibrium { report, .. } =
            solve_market(&inst, &enumerated).unwrap().solution
        else {
            panic!()
        };
        assert!(report.is_equilibrium());
    }
}

#[test]
fn existence_certificates() {
    for seed in 0..20 {
        let inst = instance_from_seed(seed, &GeneratorConfig::default());
        let Existence::Exists { lp, ip, outcome } = equilibrium_exists(&inst).unwrap() else {
            panic!()
        };
        assert_eq!(lp, ip);
        assert!(verify_equilibrium(&outcome, &inst)
            .unwrap()
            .is_equilibrium());
    }
}

#[test]
fn vcg_identities() {
    let config = GeneratorConfig {
        max_riders: 4,
        ..GeneratorConfig::default()
    };
    for seed in 0..40 {
        let inst = instance_from_seed(seed, &config);
        let v = vcg_equilibrium(&inst).unwrap();
        for m in 0..inst.num_riders() {
            assert_eq!(v.utilities[m], &v.welfare - &v.counterfactual_welfare[m]);
        }
        assert_eq!(
            v.utilities.iter().sum::<Rational>() + revenue(&inst, &v.tolls),
            v.welfare
        );
        let report = verify_equilibrium(&v.outcome(), &inst).unwrap();
        assert!(report.all_hold(), "seed {seed}: {:?}", report.violations);

        let dual = solve_dual(&inst, DualMethod::Separation).unwrap();
        assert!(v.utilities.iter().zip(&dual.utilities).all(|(a, b)| a >= b));
        assert!(revenue(&inst, &v.tolls) <= revenue(&inst, &dual.tolls));
    }
}

#[test]
fn misreports_do_not_pay() {
    let config = GeneratorConfig {
        max_riders: 3,
        ..GeneratorConfig::default()
    };
    for seed in 0..8 {
        let inst = instance_from_seed(seed, &config);
        for m in 0..inst.num_riders() {
            let truth = inst.rider(m).clone();
            for da in [-4, 0, 4] {
                for db in [0, 1] {
                    let alpha = &truth.alpha + frac(da, 1);
                    let beta = &truth.beta * frac(db + 1, 1);
                    let p = strategyproofness_probe(&inst, m, alpha, beta).unwrap();
                    assert!(!p.is_profitable(), "seed {seed} rider {m}");
                }
            }
        }
    }
}

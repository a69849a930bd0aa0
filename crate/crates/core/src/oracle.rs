//! Brute-force ground truth for small instances: exhaustive integer
//! optimization, the exact LP relaxation, the capacity reassignment
//! procedure onto greedy route capacities, and canonical fixtures.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use crate::error::{CarpoolError, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::network::{decompose_series_parallel, Edge, Network, RouteCapacityVector, RouteIdx};
use crate::preferences::{Group, MarketInstance, RiderPreferences};
use crate::rational::{int, Rational};
use crate::trips::{Trip, TripVector};

/// Rider guard for the exhaustive solvers.
pub const ORACLE_MAX_RIDERS: usize = 8;
/// Route guard for the exhaustive solvers.
pub const ORACLE_MAX_ROUTES: usize = 32;

pub fn check_guards(instance: &MarketInstance) -> Result<()> {
    if instance.num_riders() > ORACLE_MAX_RIDERS {
        return Err(CarpoolError::TooLarge {
            what: "rider count",
            actual: instance.num_riders(),
            limit: ORACLE_MAX_RIDERS,
        });
    }
    let routes = instance.network().routes().len();
    if routes > ORACLE_MAX_ROUTES {
        return Err(CarpoolError::TooLarge {
            what: "route count",
            actual: routes,
            limit: ORACLE_MAX_ROUTES,
        });
    }
    Ok(())
}

/// Fractional trip weights `x_r(b)`; absent pairs are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FractionalTripVector {
    pub entries: Vec<(Group, RouteIdx, Rational)>,
}

impl FractionalTripVector {
    pub fn from_trips(trips: &TripVector) -> Self {
        Self {
            entries: trips
                .trips()
                .iter()
                .map(|t| (t.group.clone(), t.route, Rational::one()))
                .collect(),
        }
    }

    pub fn welfare(&self, instance: &MarketInstance) -> Result<Rational> {
        self.entries
            .iter()
            .try_fold(Rational::zero(), |acc, (g, r, x)| {
                Ok(acc + instance.social_trip_value(g, *r)? * x)
            })
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|(_, _, x)| x.is_integer())
    }

    /// Support as `(group, route)` pairs with positive weight.
    pub fn support(&self) -> Vec<(Group, RouteIdx)> {
        self.entries
            .iter()
            .filter(|(_, _, x)| x.is_positive())
            .map(|(g, r, _)| (g.clone(), *r))
            .collect()
    }

    fn rider_totals(&self, riders: usize) -> Vec<Rational> {
        let mut totals = vec![Rational::zero(); riders];
        for (g, _, x) in &self.entries {
            for &m in g.members() {
                totals[m] += x;
            }
        }
        totals
    }

    /// Feasible for the LP relaxation on the full network.
    pub fn is_feasible(&self, instance: &MarketInstance) -> bool {
        let network = instance.network();
        let mut load = vec![Rational::zero(); network.edges().len()];
        for (g, r, x) in &self.entries {
            if x.is_negative() || g.is_empty() || g.len() > instance.car_capacity() {
                return false;
            }
            for &e in &network.route(*r).edges {
                load[e] += x;
            }
        }
        self.rider_totals(instance.num_riders())
            .iter()
            .all(|t| *t <= Rational::one())
            && load
                .iter()
                .zip(network.edges())
                .all(|(l, e)| *l <= Rational::from_integer(e.capacity.into()))
    }

    /// Feasible for the relaxation restricted to route capacities `k`.
    pub fn is_feasible_for_capacities(
        &self,
        instance: &MarketInstance,
        capacities: &RouteCapacityVector,
    ) -> bool {
        let mut per_route = vec![Rational::zero(); instance.network().routes().len()];
        for (g, r, x) in &self.entries {
            if x.is_negative() || g.is_empty() || g.len() > instance.car_capacity() {
                return false;
            }
            per_route[*r] += x;
        }
        self.rider_totals(instance.num_riders())
            .iter()
            .all(|t| *t <= Rational::one())
            && per_route
                .iter()
                .enumerate()
                .all(|(r, x)| *x <= Rational::from_integer(capacities.get(r).into()))
    }
}

/// Decomposition of a group's value as `z(b) - g(b) t_r`, with its weight `f(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSensitivity {
    pub group: Group,
    pub base_value: Rational,
    pub sensitivity: Rational,
    pub weight: Rational,
}

/// Groups with positive total weight in `x`, in decreasing sensitivity
/// (ties by group order).
pub fn group_sensitivities(
    x: &FractionalTripVector,
    instance: &MarketInstance,
) -> Vec<GroupSensitivity> {
    let mut weights: Vec<(Group, Rational)> = Vec::new();
    for (g, _, w) in &x.entries {
        match weights.iter_mut().find(|(h, _)| h == g) {
            Some((_, total)) => *total += w,
            None => weights.push((g.clone(), w.clone())),
        }
    }
    let mut out: Vec<GroupSensitivity> = weights
        .into_iter()
        .filter(|(_, w)| w.is_positive())
        .map(|(group, weight)| GroupSensitivity {
            base_value: instance.base_value(&group),
            sensitivity: instance.sensitivity(&group),
            group,
            weight,
        })
        .collect();
    out.sort_by(|a, b| {
        b.sensitivity
            .cmp(&a.sensitivity)
            .then_with(|| a.group.cmp(&b.group))
    });
    out
}

/// Candidate trips with positive value; the only columns an optimum can use.
fn positive_columns(
    instance: &MarketInstance,
    routes: &[RouteIdx],
) -> Vec<(Group, RouteIdx, Rational)> {
    let mut cols = Vec::new();
    for g in instance.feasible_groups(&instance.all_riders()) {
        for &r in routes {
            let v = instance.social_trip_value(&g, r).expect("feasible group");
            if v.is_positive() {
                cols.push((g.clone(), r, v));
            }
        }
    }
    cols
}

fn relaxation_program(
    instance: &MarketInstance,
    cols: &[(Group, RouteIdx, Rational)],
    capacities: Option<&RouteCapacityVector>,
) -> LinearProgram {
    let mut lp = LinearProgram::new(Sense::Maximize, cols.iter().map(|c| c.2.clone()).collect());
    for m in 0..instance.num_riders() {
        let terms = cols
            .iter()
            .enumerate()
            .filter(|(_, c)| c.0.contains(m))
            .map(|(j, _)| (j, Rational::one()))
            .collect::<Vec<_>>();
        if !terms.is_empty() {
            lp.add_constraint(terms, Relation::Le, Rational::one());
        }
    }
    let network = instance.network();
    match capacities {
        None => {
            for (e, edge) in network.edges().iter().enumerate() {
                let terms = cols
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| network.route(c.1).contains(e))
                    .map(|(j, _)| (j, Rational::one()))
                    .collect::<Vec<_>>();
                if !terms.is_empty() {
                    lp.add_constraint(
                        terms,
                        Relation::Le,
                        Rational::from_integer(edge.capacity.into()),
                    );
                }
            }
        }
        Some(k) => {
            for r in k.support() {
                let terms = cols
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.1 == r)
                    .map(|(j, _)| (j, Rational::one()))
                    .collect::<Vec<_>>();
                if !terms.is_empty() {
                    lp.add_constraint(terms, Relation::Le, Rational::from_integer(k.get(r).into()));
                }
            }
        }
    }
    lp
}

fn solve_relaxation(
    instance: &MarketInstance,
    cols: Vec<(Group, RouteIdx, Rational)>,
    capacities: Option<&RouteCapacityVector>,
) -> Result<(FractionalTripVector, Rational)> {
    let lp = relaxation_program(instance, &cols, capacities);
    let sol = lp
        .solve()
        .optimal()
        .ok_or(CarpoolError::LinearProgram("not optimal"))?;
    let entries = cols
        .into_iter()
        .zip(sol.values)
        .filter(|(_, x)| !x.is_zero())
        .map(|((g, r, _), x)| (g, r, x))
        .collect();
    Ok((FractionalTripVector { entries }, sol.objective))
}

/// Exact optimum of the LP relaxation of optimal trip organization, with the
/// simplex vertex attaining it. Columns with nonpositive value are omitted
/// since they never improve the objective.
pub fn solve_lp_relaxation(instance: &MarketInstance) -> Result<(FractionalTripVector, Rational)> {
    check_guards(instance)?;
    let routes: Vec<RouteIdx> = (0..instance.network().routes().len()).collect();
    solve_relaxation(instance, positive_columns(instance, &routes), None)
}

/// LP relaxation on the sub-network of routes with capacities `k`.
pub fn solve_lp_relaxation_with_capacities(
    instance: &MarketInstance,
    capacities: &RouteCapacityVector,
) -> Result<(FractionalTripVector, Rational)> {
    check_guards(instance)?;
    let cols = positive_columns(instance, &capacities.support());
    solve_relaxation(instance, cols, Some(capacities))
}

/// Whether the relaxation's optimal face is a single point: every column's
/// weight has the same minimum and maximum over the optimal set.
pub fn lp_relaxation_is_unique(instance: &MarketInstance) -> Result<bool> {
    check_guards(instance)?;
    let routes: Vec<RouteIdx> = (0..instance.network().routes().len()).collect();
    let cols = positive_columns(instance, &routes);
    let base = relaxation_program(instance, &cols, None);
    let optimum = base
        .solve()
        .optimal()
        .ok_or(CarpoolError::LinearProgram("not optimal"))?
        .objective;
    for j in 0..cols.len() {
        let mut extremes = Vec::new();
        for sense in [Sense::Maximize, Sense::Minimize] {
            let mut objective = vec![Rational::zero(); cols.len()];
            objective[j] = Rational::one();
            let mut lp = LinearProgram {
                sense,
                objective,
                constraints: base.constraints.clone(),
            };
            lp.add_constraint(
                cols.iter()
                    .enumerate()
                    .map(|(i, c)| (i, c.2.clone()))
                    .collect(),
                Relation::Eq,
                optimum.clone(),
            );
            extremes.push(
                lp.solve()
                    .optimal()
                    .ok_or(CarpoolError::LinearProgram("not optimal"))?
                    .objective,
            );
        }
        if extremes[0] != extremes[1] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exhaustive integer optimum. Riders are decided in index order: the lowest
/// undecided rider either stays home or opens a trip with later riders on a
/// route that still has room. Subproblems are memoized on the undecided set
/// and the residual edge capacities. Among optimal vectors the first found
/// in that order is returned.
pub fn brute_force_ip(instance: &MarketInstance) -> Result<(TripVector, Rational)> {
    check_guards(instance)?;
    let network = instance.network();
    let n = instance.num_riders();
    let routes = network.routes().len();
    let mut candidates: Vec<Vec<(u32, RouteIdx, Rational)>> = vec![Vec::new(); n];
    for g in instance.feasible_groups(&instance.all_riders()) {
        let mask = g.members().iter().fold(0u32, |acc, &m| acc | (1 << m));
        let lowest = g.members()[0];
        for r in 0..routes {
            let v = instance.social_trip_value(&g, r)?;
            if v.is_positive() {
                candidates[lowest].push((mask, r, v));
            }
        }
    }
    let mut search = IpSearch {
        network,
        candidates,
        memo: HashMap::new(),
    };
    let residual: Vec<u64> = network.edges().iter().map(|e| e.capacity).collect();
    let full = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let (value, picks) = search.best(full, &residual);
    let trips = picks
        .into_iter()
        .map(|(mask, route)| Trip {
            route,
            group: Group::new((0..n).filter(|m| mask & (1 << m) != 0).collect()),
        })
        .collect();
    Ok((TripVector::new(trips), value))
}

type IpValue = (Rational, Vec<(u32, RouteIdx)>);

struct IpSearch<'a> {
    network: &'a Network,
    candidates: Vec<Vec<(u32, RouteIdx, Rational)>>,
    memo: HashMap<(u32, Vec<u64>), IpValue>,
}

impl IpSearch<'_> {
    fn best(&mut self, undecided: u32, residual: &[u64]) -> IpValue {
        if undecided == 0 {
            return (Rational::zero(), Vec::new());
        }
        let key = (undecided, residual.to_vec());
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let i = undecided.trailing_zeros() as usize;
        let mut best = self.best(undecided & !(1 << i), residual);
        for c in 0..self.candidates[i].len() {
            let (mask, r, ref v) = self.candidates[i][c];
            if mask & !undecided != 0 {
                continue;
            }
            let edges = &self.network.route(r).edges;
            if edges.iter().any(|&e| residual[e] == 0) {
                continue;
            }
            let v = v.clone();
            let mut next = residual.to_vec();
            for &e in edges {
                next[e] -= 1;
            }
            let (rest, mut picks) = self.best(undecided & !mask, &next);
            let total = rest + v;
            if total > best.0 {
                picks.push((mask, r));
                best = (total, picks);
            }
        }
        self.memo.insert(key, best.clone());
        best
    }
}

/// Moves a feasible fractional solution onto the greedy route capacities:
/// groups in decreasing sensitivity pour their total weight into the
/// capacitated routes in increasing travel time, splitting at capacity
/// boundaries. Refuses networks that are not series-parallel.
pub fn reassign_to_subnetwork(
    xhat: &FractionalTripVector,
    capacities: &RouteCapacityVector,
    instance: &MarketInstance,
) -> Result<FractionalTripVector> {
    let network = instance.network();
    if decompose_series_parallel(network).is_err() {
        return Err(CarpoolError::NotSeriesParallel);
    }
    let mut routes = capacities.support();
    routes.sort_by(|a, b| {
        network
            .route(*a)
            .travel_time
            .cmp(&network.route(*b).travel_time)
            .then(a.cmp(b))
    });
    let mut room: Vec<Rational> = routes
        .iter()
        .map(|&r| Rational::from_integer(capacities.get(r).into()))
        .collect();
    let mut cursor = 0;
    let mut entries: Vec<(Group, RouteIdx, Rational)> = Vec::new();
    for gs in group_sensitivities(xhat, instance) {
        let mut remaining = gs.weight;
        while remaining.is_positive() {
            while cursor < routes.len() && room[cursor].is_zero() {
                cursor += 1;
            }
            if cursor == routes.len() {
                return Err(CarpoolError::InfeasibleTrips(
                    "fractional weight exceeds the greedy route capacities".into(),
                ));
            }
            let poured = remaining.clone().min(room[cursor].clone());
            room[cursor] -= &poured;
            remaining -= &poured;
            entries.push((gs.group.clone(), routes[cursor], poured));
        }
    }
    Ok(FractionalTripVector { entries })
}

/// The Wheatstone bridge market: no equilibrium exists.
///
/// Edges `e1..e5` with capacities `(1, 1, 1, 1, 4)` and travel times
/// `(1, 3, 3, 1, 0)`; three identical riders with `alpha = 7`, `beta = 1`,
/// no carpool disutility, `delta = 0`, cars of two.
pub fn wheatstone_fixture() -> MarketInstance {
    let edge = |id: &str, from: &str, to: &str, capacity: u64, t: i64| Edge {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        capacity,
        travel_time: int(t),
    };
    let network = Network::new(
        ["o", "a", "b", "d"].iter().map(|s| s.to_string()).collect(),
        "o",
        "d",
        vec![
            edge("e1", "o", "a", 1, 1),
            edge("e2", "a", "d", 1, 3),
            edge("e3", "o", "b", 1, 3),
            edge("e4", "b", "d", 1, 1),
            edge("e5", "a", "b", 4, 0),
        ],
    )
    .expect("fixture network is valid");
    let riders = (1..=3)
        .map(|i| RiderPreferences {
            id: i.to_string(),
            alpha: int(7),
            beta: int(1),
            gamma: vec![int(0), int(0)],
        })
        .collect();
    MarketInstance::new(network, riders, int(0), 2).expect("fixture instance is valid")
}

/// A series-parallel market where the total toll of an idle route exceeds
/// that of a shorter route in every equilibrium.
///
/// `e1: o -> a` (capacity 1, time 0) feeds `e2` and `e3: a -> d` (times 1
/// and 5); `e4: o -> d` has time 3. Capacities other than `e1` are 5. Two
/// solo riders with `alpha = 10`, `beta = 1`. One rider takes `e1-e2`, the
/// other `e4`; both keep utility 7, so `e1` is tolled 2 and the idle route
/// `e1-e3` costs more than `e4`.
pub fn idle_route_toll_fixture() -> MarketInstance {
    let edge = |id: &str, from: &str, to: &str, capacity: u64, t: i64| Edge {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        capacity,
        travel_time: int(t),
    };
    let network = Network::new(
        ["o", "a", "d"].iter().map(|s| s.to_string()).collect(),
        "o",
        "d",
        vec![
            edge("e1", "o", "a", 1, 0),
            edge("e2", "a", "d", 5, 1),
            edge("e3", "a", "d", 5, 5),
            edge("e4", "o", "d", 5, 3),
        ],
    )
    .expect("fixture network is valid");
    let riders = (1..=2)
        .map(|i| RiderPreferences {
            id: format!("r{i}"),
            alpha: int(10),
            beta: int(1),
            gamma: vec![int(0)],
        })
        .collect();
    MarketInstance::new(network, riders, int(0), 1).expect("fixture instance is valid")
}

/// Heterogeneous disutility breaking the exchange condition: three riders
/// worth 10 alone on a unit-time edge, the third of whom dislikes sharing.
pub fn heterogeneous_gs_fixture() -> MarketInstance {
    let network = Network::new(
        vec!["o".into(), "d".into()],
        "o",
        "d",
        vec![Edge {
            id: "e1".into(),
            from: "o".into(),
            to: "d".into(),
            capacity: 1,
            travel_time: int(1),
        }],
    )
    .expect("fixture network is valid");
    let riders = [0, 0, 10]
        .into_iter()
        .enumerate()
        .map(|(i, g)| RiderPreferences {
            id: format!("r{}", i + 1),
            alpha: int(11),
            beta: int(1),
            gamma: vec![int(0), int(g)],
        })
        .collect();
    MarketInstance::new(network, riders, int(0), 2).expect("fixture instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::greedy_route_capacities;
    use crate::rational::frac;

    #[test]
    fn wheatstone_values() {
        let w = wheatstone_fixture();
        let times: Vec<_> = w
            .network()
            .routes()
            .iter()
            .map(|r| r.travel_time.clone())
            .collect();
        assert_eq!(times, [int(4), int(2), int(4)]);
        let solo = Group::new(vec![0]);
        let pair = Group::new(vec![0, 1]);
        assert_eq!(w.social_trip_value(&solo, 0).unwrap(), int(3));
        assert_eq!(w.social_trip_value(&solo, 1).unwrap(), int(5));
        assert_eq!(w.social_trip_value(&solo, 2).unwrap(), int(3));
        assert_eq!(w.social_trip_value(&pair, 0).unwrap(), int(6));
        assert_eq!(w.social_trip_value(&pair, 1).unwrap(), int(10));
    }

    #[test]
    fn wheatstone_lp_and_ip() {
        let w = wheatstone_fixture();
        let (x, lp) = solve_lp_relaxation(&w).unwrap();
        assert_eq!(lp, int(11));
        assert!(!x.is_integral());
        // Half-integral support: three pairs, one per route.
        let support = x.support();
        assert_eq!(support.len(), 3);
        assert!(x
            .entries
            .iter()
            .all(|(g, _, v)| g.len() == 2 && *v == frac(1, 2)));
        let mut routes: Vec<_> = support.iter().map(|s| s.1).collect();
        routes.sort();
        assert_eq!(routes, vec![0, 1, 2]);
        // Rider symmetry: relabelings of the half-integral vertex are optimal too.
        assert!(!lp_relaxation_is_unique(&w).unwrap());
        for pairs in [[(0, 1), (1, 2), (0, 2)], [(0, 2), (0, 1), (1, 2)]] {
            let y = FractionalTripVector {
                entries: pairs
                    .iter()
                    .enumerate()
                    .map(|(r, &(a, b))| (Group::new(vec![a, b]), r, frac(1, 2)))
                    .collect(),
            };
            assert!(y.is_feasible(&w));
            assert_eq!(y.welfare(&w).unwrap(), int(11));
        }

        let (trips, ip) = brute_force_ip(&w).unwrap();
        assert_eq!(ip, int(10));
        assert_eq!(trips.trips().len(), 1);
        assert_eq!(trips.trips()[0].route, 1);
    }

    #[test]
    fn single_rider_ip() {
        let w = wheatstone_fixture();
        let one = w.with_riders(vec![w.rider(0).clone()]).unwrap();
        let (trips, v) = brute_force_ip(&one).unwrap();
        assert_eq!(v, int(5));
        assert_eq!(trips.trips().len(), 1);

        let mut loser = w.rider(0).clone();
        loser.alpha = int(1);
        let one = w.with_riders(vec![loser]).unwrap();
        let (trips, v) = brute_force_ip(&one).unwrap();
        assert_eq!(v, int(0));
        assert!(trips.is_empty());
    }

    #[test]
    fn reassignment_refuses_non_sp() {
        let w = wheatstone_fixture();
        let (x, _) = solve_lp_relaxation(&w).unwrap();
        let k = greedy_route_capacities(w.network());
        assert_eq!(
            reassign_to_subnetwork(&x, &k, &w),
            Err(CarpoolError::NotSeriesParallel)
        );
    }

    #[test]
    fn guards() {
        let w = wheatstone_fixture();
        let many: Vec<_> = (0..9)
            .map(|i| RiderPreferences {
                id: format!("r{i}"),
                ..w.rider(0).clone()
            })
            .collect();
        let big = w.with_riders(many).unwrap();
        assert!(matches!(
            brute_force_ip(&big),
            Err(CarpoolError::TooLarge { .. })
        ));
        assert!(matches!(
            solve_lp_relaxation(&big),
            Err(CarpoolError::TooLarge { .. })
        ));
    }
}

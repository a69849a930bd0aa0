//! Utilities and tolls from the dual program, payments, and the exact
//! equilibrium checks.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::auction::{auction_trips, AuctionConfig};
use crate::error::{CarpoolError, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::network::{
    decompose_series_parallel, greedy_route_capacities, network_capacity, RouteCapacityVector,
    RouteIdx,
};
use crate::oracle::{brute_force_ip, check_guards, solve_lp_relaxation};
use crate::preferences::{Group, HomogeneousValueParams, MarketInstance, RiderIdx};
use crate::rational::{self, Rational};
use crate::trips::TripVector;

/// `u^m`, indexed by rider.
pub type UtilityVector = Vec<Rational>;
/// `tau_e`, indexed by edge.
pub type TollVector = Vec<Rational>;
/// `lambda_r`, indexed by route; zero off the capacitated routes.
pub type RouteTollVector = Vec<Rational>;
/// `p^m`, indexed by rider.
pub type PaymentVector = Vec<Rational>;

/// Rider limit for exhaustive separation and enumeration.
pub const EXHAUSTIVE_MAX_RIDERS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub trips: TripVector,
    pub payments: PaymentVector,
    pub tolls: TollVector,
}

impl Outcome {
    /// `u^m = v^m(x) - p^m`.
    pub fn utilities(&self, instance: &MarketInstance) -> Result<UtilityVector> {
        (0..instance.num_riders())
            .map(|m| Ok(self.trips.rider_value(instance, m)? - &self.payments[m]))
            .collect()
    }
}

/// How dual constraints are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualMethod {
    /// Add the most violated constraint per route until none is violated.
    #[default]
    Separation,
    /// Write down every constraint with positive right-hand side.
    Enumeration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub utilities: UtilityVector,
    pub tolls: TollVector,
    pub objective: Rational,
    /// Constraint generation rounds (1 for enumeration).
    pub rounds: usize,
    pub constraints: usize,
}

/// Best nonempty group for route `r` drawn from `universe` against prices
/// `u`: maximizes `V_r(b) - sum_b u`. `None` when `universe` is empty.
pub fn best_priced_group(
    instance: &MarketInstance,
    r: RouteIdx,
    u: &[Rational],
    universe: &[RiderIdx],
) -> Result<Option<(Group, Rational)>> {
    match instance.homogeneous_params() {
        Some(params) => Ok(greedy_priced_group(instance, &params, r, u, universe)),
        None => exhaustive_priced_group(instance, r, u, universe),
    }
}

fn greedy_priced_group(
    instance: &MarketInstance,
    params: &HomogeneousValueParams,
    r: RouteIdx,
    u: &[Rational],
    universe: &[RiderIdx],
) -> Option<(Group, Rational)> {
    let t = &instance.network().route(r).travel_time;
    let mut order: Vec<(Rational, RiderIdx)> = universe
        .iter()
        .map(|&m| (instance.eta(m, r) - &u[m], m))
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut total = Rational::zero();
    let mut best: Option<(usize, Rational)> = None;
    for (h, (w, _)) in order.iter().enumerate().take(instance.car_capacity()) {
        total += w;
        let value = &total - &params.theta[h + 1] * t;
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((h + 1, value));
        }
    }
    best.map(|(h, value)| (Group::new(order[..h].iter().map(|p| p.1).collect()), value))
}

fn exhaustive_priced_group(
    instance: &MarketInstance,
    r: RouteIdx,
    u: &[Rational],
    universe: &[RiderIdx],
) -> Result<Option<(Group, Rational)>> {
    if universe.len() > EXHAUSTIVE_MAX_RIDERS {
        return Err(CarpoolError::TooLarge {
            what: "rider count for exhaustive separation",
            actual: universe.len(),
            limit: EXHAUSTIVE_MAX_RIDERS,
        });
    }
    let mut best: Option<(Group, Rational)> = None;
    for g in instance.feasible_groups(universe) {
        let value = instance.social_trip_value(&g, r)?
            - g.members().iter().map(|&m| &u[m]).sum::<Rational>();
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((g, value));
        }
    }
    Ok(best)
}

/// Column layout shared by the edge-toll dual programs: riders, then edges.
struct EdgeDual<'a> {
    instance: &'a MarketInstance,
    lp: LinearProgram,
}

impl<'a> EdgeDual<'a> {
    fn new(instance: &'a MarketInstance) -> Self {
        let objective = vec![Rational::one(); instance.num_riders()]
            .into_iter()
            .chain(
                instance
                    .network()
                    .edges()
                    .iter()
                    .map(|e| Rational::from_integer(e.capacity.into())),
            )
            .collect();
        Self {
            instance,
            lp: LinearProgram::new(Sense::Minimize, objective),
        }
    }

    fn add(&mut self, group: &Group, r: RouteIdx) -> Result<()> {
        let n = self.instance.num_riders();
        let terms = group
            .members()
            .iter()
            .map(|&m| (m, Rational::one()))
            .chain(
                self.instance
                    .network()
                    .route(r)
                    .edges
                    .iter()
                    .map(|&e| (n + e, Rational::one())),
            )
            .collect();
        let v = self.instance.social_trip_value(group, r)?;
        self.lp.add_constraint(terms, Relation::Ge, v);
        Ok(())
    }

    fn add_all(&mut self) -> Result<()> {
        let instance = self.instance;
        if instance.num_riders() > EXHAUSTIVE_MAX_RIDERS {
            return Err(CarpoolError::TooLarge {
                what: "rider count for dual enumeration",
                actual: instance.num_riders(),
                limit: EXHAUSTIVE_MAX_RIDERS,
            });
        }
        for g in instance.feasible_groups(&instance.all_riders()) {
            for r in 0..instance.network().routes().len() {
                if instance.social_trip_value(&g, r)?.is_positive() {
                    self.add(&g, r)?;
                }
            }
        }
        Ok(())
    }

    fn split(&self, values: Vec<Rational>) -> (UtilityVector, TollVector) {
        let mut u = values;
        let tau = u.split_off(self.instance.num_riders());
        (u, tau)
    }
}

/// Optimal `(u, tau)` of the dual: minimize `sum u + sum q tau` subject to
/// `sum_b u + sum_{e in r} tau >= V_r(b)` for every trip, `u, tau >= 0`.
pub fn solve_dual(instance: &MarketInstance, method: DualMethod) -> Result<DualSolution> {
    let mut dual = EdgeDual::new(instance);
    let riders = instance.all_riders();
    let network = instance.network();
    let mut rounds = 0;
    if method == DualMethod::Enumeration {
        dual.add_all()?;
    }
    loop {
        rounds += 1;
        let sol = dual
            .lp
            .solve()
            .optimal()
            .ok_or(CarpoolError::LinearProgram("dual is not optimal"))?;
        let objective = sol.objective;
        let (u, tau) = dual.split(sol.values);
        if method == DualMethod::Enumeration {
            return Ok(DualSolution {
                utilities: u,
                tolls: tau,
                objective,
                rounds,
                constraints: dual.lp.constraints.len(),
            });
        }
        let mut added = 0;
        for r in 0..network.routes().len() {
            if let Some((group, value)) = best_priced_group(instance, r, &u, &riders)? {
                if value > network.route_sum(r, &tau) {
                    dual.add(&group, r)?;
                    added += 1;
                }
            }
        }
        if added == 0 {
            return Ok(DualSolution {
                utilities: u,
                tolls: tau,
                objective,
                rounds,
                constraints: dual.lp.constraints.len(),
            });
        }
    }
}

/// Dual of the relaxation restricted to the routes of `capacities`, with one
/// toll per route: minimize `sum u + sum k_r lambda_r`.
pub fn solve_route_toll_dual(
    instance: &MarketInstance,
    capacities: &RouteCapacityVector,
) -> Result<(UtilityVector, RouteTollVector, Rational)> {
    check_guards(instance)?;
    let n = instance.num_riders();
    let support = capacities.support();
    let objective = vec![Rational::one(); n]
        .into_iter()
        .chain(
            support
                .iter()
                .map(|&r| Rational::from_integer(capacities.get(r).into())),
        )
        .collect();
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    for g in instance.feasible_groups(&instance.all_riders()) {
        for (j, &r) in support.iter().enumerate() {
            let v = instance.social_trip_value(&g, r)?;
            if v.is_positive() {
                let terms = g
                    .members()
                    .iter()
                    .map(|&m| (m, Rational::one()))
                    .chain([(n + j, Rational::one())])
                    .collect();
                lp.add_constraint(terms, Relation::Ge, v);
            }
        }
    }
    let sol = lp
        .solve()
        .optimal()
        .ok_or(CarpoolError::LinearProgram("route dual is not optimal"))?;
    let mut u = sol.values;
    let lambda_support = u.split_off(n);
    let mut lambda = vec![Rational::zero(); instance.network().routes().len()];
    for (j, &r) in support.iter().enumerate() {
        lambda[r] = lambda_support[j].clone();
    }
    Ok((u, lambda, sol.objective))
}

/// Extremes of the optimal dual face.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFace {
    pub optimum: Rational,
    /// Largest `u^m` over all optimal duals.
    pub max_utilities: UtilityVector,
    /// Smallest `sum q tau` over all optimal duals.
    pub min_revenue: Rational,
}

/// Maximizes each utility and minimizes toll revenue over the optimal dual
/// face. The face is bounded, so these extremes are attained at vertices and
/// bound every vertex.
pub fn dual_face(instance: &MarketInstance) -> Result<DualFace> {
    let mut dual = EdgeDual::new(instance);
    dual.add_all()?;
    let optimum = dual
        .lp
        .solve()
        .optimal()
        .ok_or(CarpoolError::LinearProgram("dual is not optimal"))?
        .objective;
    let n = instance.num_riders();
    let width = dual.lp.num_vars();
    let mut face = dual.lp.clone();
    face.add_constraint(
        dual.lp.objective.iter().cloned().enumerate().collect(),
        Relation::Eq,
        optimum.clone(),
    );
    let extreme = |sense: Sense, objective: Vec<Rational>| -> Result<Rational> {
        let lp = LinearProgram {
            sense,
            objective,
            constraints: face.constraints.clone(),
        };
        Ok(lp
            .solve()
            .optimal()
            .ok_or(CarpoolError::LinearProgram("face is not optimal"))?
            .objective)
    };
    let mut max_utilities = Vec::with_capacity(n);
    for m in 0..n {
        let mut objective = vec![Rational::zero(); width];
        objective[m] = Rational::one();
        max_utilities.push(extreme(Sense::Maximize, objective)?);
    }
    let mut revenue = dual.lp.objective.clone();
    for c in revenue.iter_mut().take(n) {
        *c = Rational::zero();
    }
    let min_revenue = extreme(Sense::Minimize, revenue)?;
    Ok(DualFace {
        optimum,
        max_utilities,
        min_revenue,
    })
}

/// `p^m = v^m(x) - u^m` for assigned riders, zero otherwise.
pub fn payments_from_utilities(
    trips: &TripVector,
    utilities: &[Rational],
    instance: &MarketInstance,
) -> Result<PaymentVector> {
    (0..instance.num_riders())
        .map(|m| {
            let u = &utilities[m];
            if u.is_negative() {
                return Err(CarpoolError::NegativeUtility {
                    rider: instance.rider(m).id.clone(),
                    utility: rational::to_exact_string(u),
                });
            }
            match trips.trip_of(m) {
                Some(t) => Ok(instance.rider_trip_value(m, &t.group, t.route)? - u),
                None => Ok(Rational::zero()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Infeasible {
        reason: String,
    },
    NegativeToll {
        edge: String,
        #[serde(serialize_with = "rational::serialize")]
        toll: Rational,
    },
    NegativeUtility {
        rider: String,
        #[serde(serialize_with = "rational::serialize")]
        utility: Rational,
    },
    Unstable {
        riders: Vec<String>,
        route: String,
        /// `V_r(b) - tau(r) - sum_b u`.
        #[serde(serialize_with = "rational::serialize")]
        excess: Rational,
    },
    TripBudget {
        riders: Vec<String>,
        route: String,
        #[serde(serialize_with = "rational::serialize")]
        paid: Rational,
        #[serde(serialize_with = "rational::serialize")]
        owed: Rational,
    },
    UnassignedPayment {
        rider: String,
        #[serde(serialize_with = "rational::serialize")]
        payment: Rational,
    },
    UnclearedToll {
        edge: String,
        #[serde(serialize_with = "rational::serialize")]
        toll: Rational,
        load: u64,
        capacity: u64,
    },
    SlackTrip {
        riders: Vec<String>,
        route: String,
        #[serde(serialize_with = "rational::serialize")]
        slack: Rational,
    },
    IdleUtility {
        rider: String,
        #[serde(serialize_with = "rational::serialize")]
        utility: Rational,
    },
    TollOrder {
        longer: String,
        shorter: String,
        #[serde(serialize_with = "rational::serialize")]
        longer_toll: Rational,
        #[serde(serialize_with = "rational::serialize")]
        shorter_toll: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub feasible: bool,
    pub individual_rationality: bool,
    pub stability: bool,
    pub budget_balance: bool,
    pub market_clearing: bool,
    pub complementary_slackness: bool,
    pub toll_monotonicity: bool,
    pub violations: Vec<Violation>,
}

impl EquilibriumReport {
    /// The four defining properties on a feasible trip vector.
    pub fn is_equilibrium(&self) -> bool {
        self.feasible
            && self.individual_rationality
            && self.stability
            && self.budget_balance
            && self.market_clearing
    }

    pub fn all_hold(&self) -> bool {
        self.is_equilibrium() && self.complementary_slackness && self.toll_monotonicity
    }

    pub fn flags(&self) -> [(&'static str, bool); 7] {
        [
            ("feasible", self.feasible),
            ("individual_rationality", self.individual_rationality),
            ("stability", self.stability),
            ("budget_balance", self.budget_balance),
            ("market_clearing", self.market_clearing),
            ("complementary_slackness", self.complementary_slackness),
            ("toll_monotonicity", self.toll_monotonicity),
        ]
    }
}

fn ids(instance: &MarketInstance, group: &Group) -> Vec<String> {
    group
        .members()
        .iter()
        .map(|&m| instance.rider(m).id.clone())
        .collect()
}

/// Checks every equilibrium property of `outcome` exactly, collecting a
/// witness for each failure. Stability is separated per route (greedily
/// under homogeneous disutility, exhaustively otherwise).
pub fn verify_equilibrium(
    outcome: &Outcome,
    instance: &MarketInstance,
) -> Result<EquilibriumReport> {
    let network = instance.network();
    let n = instance.num_riders();
    if outcome.payments.len() != n || outcome.tolls.len() != network.edges().len() {
        return Err(CarpoolError::InvalidInstance(
            "outcome dimensions do not match the instance".into(),
        ));
    }
    let mut violations = Vec::new();
    let mut feasible = true;
    if let Err(e) = outcome.trips.check_feasible(instance) {
        feasible = false;
        violations.push(Violation::Infeasible {
            reason: e.to_string(),
        });
    }
    for (e, toll) in outcome.tolls.iter().enumerate() {
        if toll.is_negative() {
            feasible = false;
            violations.push(Violation::NegativeToll {
                edge: network.edge(e).id.clone(),
                toll: toll.clone(),
            });
        }
    }
    if !feasible {
        return Ok(EquilibriumReport {
            feasible,
            individual_rationality: false,
            stability: false,
            budget_balance: false,
            market_clearing: false,
            complementary_slackness: false,
            toll_monotonicity: false,
            violations,
        });
    }
    let u = outcome.utilities(instance)?;
    let route_toll = |r: RouteIdx| network.route_sum(r, &outcome.tolls);

    let mut individual_rationality = true;
    for (m, um) in u.iter().enumerate() {
        if um.is_negative() {
            individual_rationality = false;
            violations.push(Violation::NegativeUtility {
                rider: instance.rider(m).id.clone(),
                utility: um.clone(),
            });
        }
    }

    let mut stability = true;
    let riders = instance.all_riders();
    for r in 0..network.routes().len() {
        if let Some((group, value)) = best_priced_group(instance, r, &u, &riders)? {
            let excess = value - route_toll(r);
            if excess.is_positive() {
                stability = false;
                violations.push(Violation::Unstable {
                    riders: ids(instance, &group),
                    route: network.route_label(r),
                    excess,
                });
            }
        }
    }

    let mut budget_balance = true;
    let mut complementary_slackness = true;
    for trip in outcome.trips.trips() {
        let t = &network.route(trip.route).travel_time;
        let paid: Rational = trip
            .group
            .members()
            .iter()
            .map(|&m| &outcome.payments[m])
            .sum();
        let owed = route_toll(trip.route)
            + instance.delta() * Rational::from_integer(trip.group.len().into()) * t;
        if paid != owed {
            budget_balance = false;
            violations.push(Violation::TripBudget {
                riders: ids(instance, &trip.group),
                route: network.route_label(trip.route),
                paid,
                owed,
            });
        }
        let held: Rational = trip.group.members().iter().map(|&m| &u[m]).sum();
        let slack =
            held + route_toll(trip.route) - instance.social_trip_value(&trip.group, trip.route)?;
        if !slack.is_zero() {
            complementary_slackness = false;
            violations.push(Violation::SlackTrip {
                riders: ids(instance, &trip.group),
                route: network.route_label(trip.route),
                slack,
            });
        }
    }
    for (m, um) in u.iter().enumerate() {
        if outcome.trips.trip_of(m).is_some() {
            continue;
        }
        if !outcome.payments[m].is_zero() {
            budget_balance = false;
            violations.push(Violation::UnassignedPayment {
                rider: instance.rider(m).id.clone(),
                payment: outcome.payments[m].clone(),
            });
        }
        if um.is_positive() {
            complementary_slackness = false;
            violations.push(Violation::IdleUtility {
                rider: instance.rider(m).id.clone(),
                utility: um.clone(),
            });
        }
    }

    let mut market_clearing = true;
    for (e, load) in outcome.trips.edge_loads(network).into_iter().enumerate() {
        let edge = network.edge(e);
        if load < edge.capacity && !outcome.tolls[e].is_zero() {
            market_clearing = false;
            complementary_slackness = false;
            violations.push(Violation::UnclearedToll {
                edge: edge.id.clone(),
                toll: outcome.tolls[e].clone(),
                load,
                capacity: edge.capacity,
            });
        }
    }

    let used: Vec<bool> = (0..network.routes().len())
        .map(|r| outcome.trips.trips().iter().any(|t| t.route == r))
        .collect();
    let toll_order = toll_order_violations_where(instance, &outcome.tolls, |r| used[r]);
    let toll_monotonicity = toll_order.is_empty();
    violations.extend(toll_order);

    Ok(EquilibriumReport {
        feasible,
        individual_rationality,
        stability,
        budget_balance,
        market_clearing,
        complementary_slackness,
        toll_monotonicity,
        violations,
    })
}

/// Route pairs where the longer route carries the strictly larger total toll.
pub fn toll_order_violations(instance: &MarketInstance, tolls: &[Rational]) -> Vec<Violation> {
    toll_order_violations_where(instance, tolls, |_| true)
}

/// As [`toll_order_violations`], only for longer routes accepted by `longer`.
///
/// The ordering is guaranteed only when the longer route carries a trip: an
/// idle route can share saturated, tolled edges with busy routes and end up
/// dearer than a shorter idle route (see
/// [`crate::oracle::idle_route_toll_fixture`]).
pub fn toll_order_violations_where(
    instance: &MarketInstance,
    tolls: &[Rational],
    longer: impl Fn(RouteIdx) -> bool,
) -> Vec<Violation> {
    let network = instance.network();
    let route_tolls: Vec<Rational> = (0..network.routes().len())
        .map(|r| network.route_sum(r, tolls))
        .collect();
    let mut out = Vec::new();
    for (r, rr) in network.routes().iter().enumerate() {
        for (s, rs) in network.routes().iter().enumerate() {
            if r != s
                && longer(r)
                && rr.travel_time >= rs.travel_time
                && route_tolls[r] > route_tolls[s]
            {
                out.push(Violation::TollOrder {
                    longer: network.route_label(r),
                    shorter: network.route_label(s),
                    longer_toll: route_tolls[r].clone(),
                    shorter_toll: route_tolls[s].clone(),
                });
            }
        }
    }
    out
}

/// Builds the outcome for optimal trips `x` from a dual solution.
pub fn assemble_outcome(
    instance: &MarketInstance,
    trips: TripVector,
    dual: &DualSolution,
) -> Result<Outcome> {
    let payments = payments_from_utilities(&trips, &dual.utilities, instance)?;
    Ok(Outcome {
        trips,
        payments,
        tolls: dual.tolls.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Existence {
    Exists {
        lp: Rational,
        ip: Rational,
        outcome: Outcome,
    },
    NotExists {
        lp: Rational,
        ip: Rational,
    },
}

/// Decides existence by comparing the relaxation with the integer optimum.
/// When they agree the returned outcome uses auction trips on
/// series-parallel networks with homogeneous disutility and the brute-force
/// trips otherwise.
pub fn equilibrium_exists(instance: &MarketInstance) -> Result<Existence> {
    let (_, lp) = solve_lp_relaxation(instance)?;
    let (ip_trips, ip) = brute_force_ip(instance)?;
    if lp != ip {
        return Ok(Existence::NotExists { lp, ip });
    }
    let trips =
        if instance.is_homogeneous() && decompose_series_parallel(instance.network()).is_ok() {
            let k = greedy_route_capacities(instance.network());
            auction_trips(
                instance,
                &k,
                &instance.all_riders(),
                &AuctionConfig::default(),
            )?
            .trips
        } else {
            ip_trips
        };
    let dual = solve_dual(instance, DualMethod::Separation)?;
    let outcome = assemble_outcome(instance, trips, &dual)?;
    Ok(Existence::Exists { lp, ip, outcome })
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub auction: AuctionConfig,
    pub dual: DualMethod,
    /// Run the auction even on networks that are not series-parallel. The
    /// trips are then a heuristic and the report says whether they work.
    pub force_auction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TripSource {
    Auction,
    AuctionHeuristic,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionDiagnostics {
    pub iterations: usize,
    #[serde(serialize_with = "rational::serialize")]
    pub iteration_bound: Rational,
    #[serde(serialize_with = "rational::serialize")]
    pub epsilon: Rational,
    #[serde(serialize_with = "rational::serialize")]
    pub scale: Rational,
    #[serde(serialize_with = "rational::serialize")]
    pub max_value: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub series_parallel: bool,
    pub homogeneous: bool,
    pub route_capacities: Vec<u64>,
    pub route_capacity_total: u64,
    pub network_capacity: u64,
    #[serde(serialize_with = "serialize_opt")]
    pub lp_optimum: Option<Rational>,
    #[serde(serialize_with = "serialize_opt")]
    pub ip_optimum: Option<Rational>,
    pub trip_source: Option<TripSource>,
    pub auction: Option<AuctionDiagnostics>,
    pub dual_rounds: Option<usize>,
}

fn serialize_opt<S: serde::Serializer>(
    value: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(v) => rational::serialize(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Equilibrium {
        outcome: Outcome,
        utilities: UtilityVector,
        report: EquilibriumReport,
    },
    /// The relaxation beats every integer trip vector.
    NoEquilibrium,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketSolution {
    pub solution: Solution,
    pub diagnostics: Diagnostics,
}

/// Full pipeline: existence check when the instance is small enough, then
/// auction trips (or brute-force trips) with dual utilities and tolls.
pub fn solve_market(instance: &MarketInstance, options: &SolveOptions) -> Result<MarketSolution> {
    let network = instance.network();
    let k = greedy_route_capacities(network);
    let series_parallel = decompose_series_parallel(network).is_ok();
    let homogeneous = instance.is_homogeneous();
    let mut diagnostics = Diagnostics {
        series_parallel,
        homogeneous,
        route_capacities: k.capacities.clone(),
        route_capacity_total: k.total(),
        network_capacity: network_capacity(network),
        lp_optimum: None,
        ip_optimum: None,
        trip_source: None,
        auction: None,
        dual_rounds: None,
    };
    let guarded = check_guards(instance).is_ok();
    let mut ip_trips = None;
    if guarded {
        let (_, lp) = solve_lp_relaxation(instance)?;
        let (trips, ip) = brute_force_ip(instance)?;
        diagnostics.lp_optimum = Some(lp.clone());
        diagnostics.ip_optimum = Some(ip.clone());
        if lp != ip {
            return Ok(MarketSolution {
                solution: Solution::NoEquilibrium,
                diagnostics,
            });
        }
        ip_trips = Some(trips);
    }
    let use_auction = homogeneous && (series_parallel || options.force_auction);
    let trips = if use_auction {
        let run = auction_trips(instance, &k, &instance.all_riders(), &options.auction)?;
        diagnostics.auction = Some(AuctionDiagnostics {
            iterations: run.outcome.state.iterations,
            iteration_bound: run.outcome.iteration_bound.clone(),
            epsilon: run.outcome.state.epsilon.clone(),
            scale: run.outcome.scale.clone(),
            max_value: run.outcome.max_value.clone(),
        });
        diagnostics.trip_source = Some(if series_parallel {
            TripSource::Auction
        } else {
            TripSource::AuctionHeuristic
        });
        run.trips
    } else if let Some(trips) = ip_trips {
        diagnostics.trip_source = Some(TripSource::BruteForce);
        trips
    } else {
        check_guards(instance)?;
        unreachable!("guards failed above")
    };
    let dual = solve_dual(instance, options.dual)?;
    diagnostics.dual_rounds = Some(dual.rounds);
    let outcome = assemble_outcome(instance, trips, &dual)?;
    let utilities = outcome.utilities(instance)?;
    let report = verify_equilibrium(&outcome, instance)?;
    Ok(MarketSolution {
        solution: Solution::Equilibrium {
            outcome,
            utilities,
            report,
        },
        diagnostics,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::network::{Edge, Network};
    use crate::preferences::RiderPreferences;
    use crate::rational::int;

    pub(crate) fn rider(id: &str, alpha: i64, beta: i64, a: usize) -> RiderPreferences {
        RiderPreferences {
            id: id.into(),
            alpha: int(alpha),
            beta: int(beta),
            gamma: vec![int(0); a],
        }
    }

    pub(crate) fn single_edge(
        capacity: u64,
        riders: Vec<RiderPreferences>,
        a: usize,
    ) -> MarketInstance {
        let network = Network::new(
            vec!["o".into(), "d".into()],
            "o",
            "d",
            vec![Edge {
                id: "e1".into(),
                from: "o".into(),
                to: "d".into(),
                capacity,
                travel_time: int(1),
            }],
        )
        .unwrap();
        MarketInstance::new(network, riders, int(0), a).unwrap()
    }

    /// Two solo riders worth 5 and 3 competing for one slot.
    pub(crate) fn one_slot() -> MarketInstance {
        single_edge(1, vec![rider("a", 6, 1, 1), rider("b", 4, 1, 1)], 1)
    }

    #[test]
    fn single_rider_gets_everything() {
        let inst = single_edge(3, vec![rider("a", 6, 1, 1)], 1);
        let d = solve_dual(&inst, DualMethod::Separation).unwrap();
        assert_eq!(d.utilities, vec![int(5)]);
        assert_eq!(d.tolls, vec![int(0)]);
        let sol = solve_market(&inst, &SolveOptions::default()).unwrap();
        let Solution::Equilibrium {
            outcome, report, ..
        } = sol.solution
        else {
            panic!()
        };
        assert_eq!(outcome.payments, vec![int(0)]);
        assert!(report.all_hold(), "{report:?}");
    }

    #[test]
    fn one_slot_dual() {
        let inst = one_slot();
        for method in [DualMethod::Separation, DualMethod::Enumeration] {
            let d = solve_dual(&inst, method).unwrap();
            assert_eq!(d.objective, int(5));
            assert_eq!(&d.utilities[0] + &d.tolls[0], int(5));
            assert!(d.utilities[1].is_zero());
            assert!(d.tolls[0] >= int(3));
        }
        let face = dual_face(&inst).unwrap();
        assert_eq!(face.max_utilities, vec![int(2), int(0)]);
        assert_eq!(face.min_revenue, int(3));

        let trips = TripVector::new(vec![crate::trips::Trip {
            route: 0,
            group: Group::new(vec![0]),
        }]);
        let p = payments_from_utilities(&trips, &[int(2), int(0)], &inst).unwrap();
        assert_eq!(p, vec![int(3), int(0)]);
        let outcome = Outcome {
            trips,
            payments: p,
            tolls: vec![int(3)],
        };
        assert!(verify_equilibrium(&outcome, &inst).unwrap().all_hold());
    }

    #[test]
    fn negative_utility_rejected() {
        let inst = one_slot();
        let err =
            payments_from_utilities(&TripVector::default(), &[int(-1), int(0)], &inst).unwrap_err();
        assert!(matches!(err, CarpoolError::NegativeUtility { .. }));
    }

    #[test]
    fn tampering_is_caught() {
        let inst = single_edge(3, vec![rider("a", 6, 1, 1)], 1);
        let Solution::Equilibrium { outcome, .. } = solve_market(&inst, &SolveOptions::default())
            .unwrap()
            .solution
        else {
            panic!()
        };
        let mut toll = outcome.clone();
        toll.tolls[0] += int(1);
        let report = verify_equilibrium(&toll, &inst).unwrap();
        assert!(!report.market_clearing);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UnclearedToll { .. })));

        let mut pay = outcome;
        pay.payments[0] += int(1);
        assert!(!verify_equilibrium(&pay, &inst).unwrap().budget_balance);
    }

    #[test]
    fn idle_route_may_cost_more() {
        let inst = crate::oracle::idle_route_toll_fixture();
        let Solution::Equilibrium {
            outcome, report, ..
        } = solve_market(&inst, &SolveOptions::default())
            .unwrap()
            .solution
        else {
            panic!()
        };
        assert!(report.all_hold(), "{report:?}");
        assert_eq!(outcome.tolls, vec![int(2), int(0), int(0), int(0)]);
        // Every optimal dual keeps both utilities at 7, which forces the toll on e1.
        let face = dual_face(&inst).unwrap();
        assert_eq!(face.max_utilities, vec![int(7), int(7)]);
        assert_eq!(face.optimum, int(16));
        let inversions = toll_order_violations(&inst, &outcome.tolls);
        assert_eq!(inversions.len(), 1);
        assert!(
            matches!(&inversions[0], Violation::TollOrder { longer, shorter, .. } if longer == "e1-e3" && shorter == "e4")
        );
    }

    #[test]
    fn wheatstone_has_no_equilibrium() {
        let w = crate::oracle::wheatstone_fixture();
        assert_eq!(
            equilibrium_exists(&w).unwrap(),
            Existence::NotExists {
                lp: int(11),
                ip: int(10)
            }
        );
        let sol = solve_market(&w, &SolveOptions::default()).unwrap();
        assert_eq!(sol.solution, Solution::NoEquilibrium);
        assert_eq!(sol.diagnostics.route_capacity_total, 1);
        assert_eq!(sol.diagnostics.network_capacity, 2);
    }

    #[test]
    fn wheatstone_heuristics_fail() {
        // Integer optimum plus the dual optimum of the relaxation cannot be an
        // equilibrium; neither can zero tolls.
        let w = crate::oracle::wheatstone_fixture();
        let (trips, _) = brute_force_ip(&w).unwrap();
        let dual = solve_dual(&w, DualMethod::Enumeration).unwrap();
        for tolls in [dual.tolls.clone(), vec![int(0); 5]] {
            let u: Vec<_> = (0..3)
                .map(|m| {
                    if trips.trip_of(m).is_some() {
                        dual.utilities[m].clone()
                    } else {
                        int(0)
                    }
                })
                .collect();
            let payments = payments_from_utilities(&trips, &u, &w).unwrap();
            let report = verify_equilibrium(
                &Outcome {
                    trips: trips.clone(),
                    payments,
                    tolls,
                },
                &w,
            )
            .unwrap();
            assert!(!report.is_equilibrium());
        }
    }
}

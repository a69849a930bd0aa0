//! Kelso-Crawford ascending auction on the auxiliary unit-capacity routes.
//!
//! Riders play the role of goods and unit-capacity route copies the role of
//! bidders. Values are scaled by the least common denominator of every
//! `eta` and marginal-cost term so that augmented values are integers, and
//! prices move in steps of `epsilon < 1/(2|M|)` in those scaled units.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{CarpoolError, Result};
use crate::network::{Network, RouteCapacityVector, RouteIdx};
use crate::preferences::{Group, MarketInstance, RiderIdx};
use crate::rational::{common_denominator, Rational};
pub use crate::trips::{Trip, TripVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxiliaryRoute {
    pub parent: RouteIdx,
    /// Copy number within the parent, `0..k_r`.
    pub copy: u64,
    pub travel_time: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuxiliaryRouteSet {
    pub routes: Vec<AuxiliaryRoute>,
}

impl AuxiliaryRouteSet {
    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn parent(&self, l: usize) -> RouteIdx {
        self.routes[l].parent
    }

    /// Distinct parent routes in order.
    pub fn parents(&self) -> Vec<RouteIdx> {
        let mut p: Vec<_> = self.routes.iter().map(|l| l.parent).collect();
        p.dedup();
        p
    }
}

/// `k_r` unit-capacity copies of every route with positive capacity.
pub fn build_auxiliary(network: &Network, capacities: &RouteCapacityVector) -> AuxiliaryRouteSet {
    let routes = capacities
        .support()
        .into_iter()
        .flat_map(|r| {
            (0..capacities.get(r)).map(move |copy| AuxiliaryRoute {
                parent: r,
                copy,
                travel_time: network.route(r).travel_time.clone(),
            })
        })
        .collect();
    AuxiliaryRouteSet { routes }
}

/// Augmented trips `y_l(b) = 1`: auxiliary route index and the (possibly
/// oversized) rider set it holds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AugmentedTripVector {
    pub selections: Vec<(usize, Group)>,
}

impl AugmentedTripVector {
    /// Each rider in at most one selection and each auxiliary route used at most once.
    pub fn is_feasible(&self, aux: &AuxiliaryRouteSet) -> bool {
        let mut routes = std::collections::HashSet::new();
        let mut riders = std::collections::HashSet::new();
        self.selections.iter().all(|(l, g)| {
            *l < aux.len() && routes.insert(*l) && g.members().iter().all(|m| riders.insert(*m))
        })
    }

    /// `S(y)`: sum of augmented values of the selected pairs.
    pub fn welfare(&self, instance: &MarketInstance, aux: &AuxiliaryRouteSet) -> Rational {
        self.selections
            .iter()
            .map(|(l, g)| instance.augmented_value(g.members(), aux.parent(*l)).0)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionState {
    /// Rider prices in scaled units, indexed by rider.
    pub utilities: Vec<Rational>,
    /// `b_l` for every auxiliary route.
    pub holdings: Vec<Group>,
    pub epsilon: Rational,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct AuctionConfig {
    /// Price increment in scaled units; defaults to `1 / (2|M| + 1)`.
    pub epsilon: Option<Rational>,
}

#[derive(Debug, Clone)]
pub struct AuctionOutcome {
    pub assignment: AugmentedTripVector,
    pub state: AuctionState,
    /// Multiplier turning every value into an integer.
    pub scale: Rational,
    /// Largest trip value among the auxiliary parents, scaled.
    pub max_value: Rational,
    /// `|M| V_max / epsilon`.
    pub iteration_bound: Rational,
}

/// Scaled view of the market restricted to the active riders.
pub struct Auction<'a> {
    instance: &'a MarketInstance,
    aux: &'a AuxiliaryRouteSet,
    active: Vec<RiderIdx>,
    scale: Rational,
    /// `eta[m][r]`, scaled; only parents of `aux` are filled in.
    eta: Vec<Vec<Rational>>,
    /// `steps[r][d] = (theta(d+1) - theta(d)) t_r`, scaled, for `d < A`.
    steps: Vec<Vec<Rational>>,
}

impl<'a> Auction<'a> {
    pub fn new(
        instance: &'a MarketInstance,
        aux: &'a AuxiliaryRouteSet,
        active: &[RiderIdx],
    ) -> Result<Self> {
        let params = instance
            .homogeneous_params()
            .ok_or(CarpoolError::HeterogeneousGamma)?;
        let network = instance.network();
        let routes = network.routes().len();
        let parents = aux.parents();
        let mut eta = vec![vec![Rational::zero(); routes]; instance.num_riders()];
        let mut steps = vec![Vec::new(); routes];
        for &r in &parents {
            let t = &network.route(r).travel_time;
            for &m in active {
                eta[m][r] = instance.eta(m, r);
            }
            steps[r] = (0..instance.car_capacity())
                .filter_map(|d| params.marginal(d))
                .map(|s| s * t)
                .collect();
        }
        let denominators = parents
            .iter()
            .flat_map(|&r| active.iter().map(move |&m| (m, r)))
            .map(|(m, r)| &eta[m][r])
            .chain(parents.iter().flat_map(|&r| steps[r].iter()));
        let scale = Rational::from_integer(common_denominator(denominators));
        for row in eta.iter_mut() {
            for v in row.iter_mut() {
                *v *= &scale;
            }
        }
        for row in steps.iter_mut() {
            for v in row.iter_mut() {
                *v *= &scale;
            }
        }
        let mut active = active.to_vec();
        active.sort_unstable();
        active.dedup();
        Ok(Self {
            instance,
            aux,
            active,
            scale,
            eta,
            steps,
        })
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    /// Default increment `1 / (2|M| + 1)`.
    pub fn default_epsilon(&self) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(2 * self.active.len() + 1))
    }

    pub fn initial_state(&self, epsilon: Rational) -> AuctionState {
        AuctionState {
            utilities: vec![Rational::zero(); self.instance.num_riders()],
            holdings: vec![Group::default(); self.aux.len()],
            epsilon,
            iterations: 0,
        }
    }

    /// Scaled augmented value of `base` on route `r` via the `eta` greedy.
    pub fn scaled_value(&self, base: &[RiderIdx], r: RouteIdx) -> Rational {
        let mut etas: Vec<&Rational> = base.iter().map(|&m| &self.eta[m][r]).collect();
        etas.sort_by(|a, b| b.cmp(a));
        let mut total = Rational::zero();
        let mut best = Rational::zero();
        let mut cost = Rational::zero();
        for (d, eta) in etas.into_iter().enumerate() {
            let Some(step) = self.steps[r].get(d) else {
                break;
            };
            total += eta;
            cost += step;
            let v = &total - &cost;
            if v > best {
                best = v;
            }
        }
        best
    }

    /// Largest scaled trip value over the parent routes.
    pub fn max_value(&self) -> Rational {
        self.aux
            .parents()
            .into_iter()
            .map(|r| self.scaled_value(&self.active, r))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Demand of auxiliary route `l`: the riders `J` outside `b_l`
    /// maximizing `W_l(J ∪ b_l) - sum_{b_l} u - sum_J (u + epsilon)`.
    ///
    /// Held riders weigh `eta` (their price is already paid) and outsiders
    /// `eta - u - epsilon`. Candidates are taken in decreasing weight while
    /// the marginal test against `(theta(h+1) - theta(h)) t_l` passes. Ties
    /// favour held riders, then lower rider index; an outsider with zero gain
    /// is not demanded.
    pub fn demand_set(&self, l: usize, state: &AuctionState) -> Group {
        let r = self.aux.parent(l);
        let held = &state.holdings[l];
        let mut candidates: Vec<(Rational, bool, RiderIdx)> = self
            .active
            .iter()
            .map(|&m| {
                if held.contains(m) {
                    (self.eta[m][r].clone(), false, m)
                } else {
                    (
                        &self.eta[m][r] - &state.utilities[m] - &state.epsilon,
                        true,
                        m,
                    )
                }
            })
            .collect();
        candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut demand = Vec::new();
        for (size, (weight, outsider, m)) in candidates.into_iter().enumerate() {
            let Some(step) = self.steps[r].get(size) else {
                break;
            };
            let passes = if outsider {
                weight > *step
            } else {
                weight >= *step
            };
            if !passes {
                break;
            }
            if outsider {
                demand.push(m);
            }
        }
        Group::new(demand)
    }

    /// Runs the auction from zero prices and empty holdings.
    pub fn run(&self, epsilon: Rational) -> Result<AuctionOutcome> {
        let m = self.active.len();
        if !epsilon.is_positive()
            || (m > 0
                && epsilon.clone() * Rational::from_integer(BigInt::from(2 * m)) >= Rational::one())
        {
            return Err(CarpoolError::InvalidEpsilon {
                epsilon: epsilon.to_string(),
                bound: if m == 0 {
                    "inf".into()
                } else {
                    Rational::new(BigInt::one(), BigInt::from(2 * m)).to_string()
                },
            });
        }
        let max_value = self.max_value();
        let iteration_bound = Rational::from_integer(BigInt::from(m)) * &max_value / &epsilon;
        let guard = (&iteration_bound * Rational::from_integer(BigInt::from(2)))
            .ceil()
            .to_integer();
        let guard = guard.max(BigInt::one());
        let mut state = self.initial_state(epsilon);
        loop {
            let next = (0..self.aux.len()).find_map(|l| {
                let demand = self.demand_set(l, &state);
                (!demand.is_empty()).then_some((l, demand))
            });
            let Some((winner, demand)) = next else { break };
            if BigInt::from(state.iterations) >= guard {
                return Err(CarpoolError::NonTermination(guard.to_string()));
            }
            for (l, held) in state.holdings.iter_mut().enumerate() {
                if l != winner && demand.members().iter().any(|&j| held.contains(j)) {
                    *held = Group::new(
                        held.members()
                            .iter()
                            .copied()
                            .filter(|&j| !demand.contains(j))
                            .collect(),
                    );
                }
            }
            let mut merged = state.holdings[winner].members().to_vec();
            merged.extend_from_slice(demand.members());
            state.holdings[winner] = Group::new(merged);
            for &j in demand.members() {
                state.utilities[j] += &state.epsilon;
            }
            state.iterations += 1;
        }
        let selections = state
            .holdings
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_empty())
            .map(|(l, g)| (l, g.clone()))
            .collect();
        Ok(AuctionOutcome {
            assignment: AugmentedTripVector { selections },
            state,
            scale: self.scale.clone(),
            max_value,
            iteration_bound,
        })
    }
}

/// Runs the auction for all riders of `instance` on `aux`.
pub fn kelso_crawford(
    instance: &MarketInstance,
    aux: &AuxiliaryRouteSet,
    config: &AuctionConfig,
) -> Result<AuctionOutcome> {
    kelso_crawford_for(instance, aux, &instance.all_riders(), config)
}

/// Runs the auction with only `active` riders participating.
pub fn kelso_crawford_for(
    instance: &MarketInstance,
    aux: &AuxiliaryRouteSet,
    active: &[RiderIdx],
    config: &AuctionConfig,
) -> Result<AuctionOutcome> {
    let auction = Auction::new(instance, aux, active)?;
    let epsilon = config
        .epsilon
        .clone()
        .unwrap_or_else(|| auction.default_epsilon());
    auction.run(epsilon)
}

/// Converts augmented trips to ordinary trips by keeping the representative
/// group of each selected rider set; the other riders of the set are dropped.
pub fn chi(
    y: &AugmentedTripVector,
    instance: &MarketInstance,
    aux: &AuxiliaryRouteSet,
) -> Result<TripVector> {
    if !y.is_feasible(aux) {
        return Err(CarpoolError::InfeasibleTrips(
            "augmented trip vector violates its row or column limits".into(),
        ));
    }
    let trips = y
        .selections
        .iter()
        .filter_map(|(l, g)| {
            let route = aux.parent(*l);
            let (_, rep) = instance.augmented_value(g.members(), route);
            (!rep.chosen.is_empty()).then_some(Trip {
                route,
                group: rep.chosen,
            })
        })
        .collect();
    Ok(TripVector::new(trips))
}

/// Greedy capacities, auction and conversion for the riders in `active`.
#[derive(Debug, Clone)]
pub struct AuctionRun {
    pub aux: AuxiliaryRouteSet,
    pub outcome: AuctionOutcome,
    pub trips: TripVector,
    pub welfare: Rational,
}

pub fn auction_trips(
    instance: &MarketInstance,
    capacities: &RouteCapacityVector,
    active: &[RiderIdx],
    config: &AuctionConfig,
) -> Result<AuctionRun> {
    let aux = build_auxiliary(instance.network(), capacities);
    let outcome = kelso_crawford_for(instance, &aux, active, config)?;
    let trips = chi(&outcome.assignment, instance, &aux)?;
    let welfare = trips.welfare(instance)?;
    Ok(AuctionRun {
        aux,
        outcome,
        trips,
        welfare,
    })
}

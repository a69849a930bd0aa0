//! Integral trip vectors: which groups ride which routes.

use num_traits::Zero;

use crate::error::{CarpoolError, Result};
use crate::network::{Network, RouteIdx};
use crate::preferences::{Group, MarketInstance, RiderIdx};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trip {
    pub route: RouteIdx,
    pub group: Group,
}

/// The organized trips `x_r(b) = 1`, kept sorted by `(route, group)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripVector {
    trips: Vec<Trip>,
}

impl TripVector {
    pub fn new(mut trips: Vec<Trip>) -> Self {
        trips.sort();
        Self { trips }
    }

    pub fn trips(&self) -> &[Trip] {
        &self.trips
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }

    /// Number of trips using each edge.
    pub fn edge_loads(&self, network: &Network) -> Vec<u64> {
        let mut load = vec![0; network.edges().len()];
        for t in &self.trips {
            for &e in &network.route(t.route).edges {
                load[e] += 1;
            }
        }
        load
    }

    pub fn trip_of(&self, m: RiderIdx) -> Option<&Trip> {
        self.trips.iter().find(|t| t.group.contains(m))
    }

    /// Each rider in at most one trip, group sizes within `1..=A`, edge loads within capacity.
    pub fn check_feasible(&self, instance: &MarketInstance) -> Result<()> {
        let fail = |m: String| Err(CarpoolError::InfeasibleTrips(m));
        let mut seen = vec![false; instance.num_riders()];
        for t in &self.trips {
            if t.route >= instance.network().routes().len() {
                return fail(format!("unknown route index {}", t.route));
            }
            if t.group.is_empty() || t.group.len() > instance.car_capacity() {
                return fail(format!(
                    "group of size {} on route {}",
                    t.group.len(),
                    t.route
                ));
            }
            for &m in t.group.members() {
                if m >= seen.len() {
                    return fail(format!("unknown rider index {m}"));
                }
                if std::mem::replace(&mut seen[m], true) {
                    return fail(format!(
                        "rider {} is in more than one trip",
                        instance.rider(m).id
                    ));
                }
            }
        }
        let network = instance.network();
        for (e, load) in self.edge_loads(network).into_iter().enumerate() {
            if load > network.edge(e).capacity {
                return fail(format!(
                    "edge {} carries {load} trips over capacity",
                    network.edge(e).id
                ));
            }
        }
        Ok(())
    }

    /// Social welfare `S(x)`.
    pub fn welfare(&self, instance: &MarketInstance) -> Result<Rational> {
        self.trips.iter().try_fold(Rational::zero(), |acc, t| {
            Ok(acc + instance.social_trip_value(&t.group, t.route)?)
        })
    }

    /// Rider `m`'s trip value under this vector (zero when unassigned).
    pub fn rider_value(&self, instance: &MarketInstance, m: RiderIdx) -> Result<Rational> {
        match self.trip_of(m) {
            Some(t) => instance.rider_trip_value(m, &t.group, t.route),
            None => Ok(Rational::zero()),
        }
    }

    /// Welfare of everyone except `m`: `S(x) - v^m`.
    pub fn welfare_without(&self, instance: &MarketInstance, m: RiderIdx) -> Result<Rational> {
        Ok(self.welfare(instance)? - self.rider_value(instance, m)?)
    }
}

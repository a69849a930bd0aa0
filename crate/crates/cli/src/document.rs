//! JSON documents read and written by the command line.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use carpool_core::equilibrium::{Diagnostics, EquilibriumReport, Outcome};
use carpool_core::rational::{parse_rational, to_exact_string};
use carpool_core::{
    Edge, Group, MarketInstance, Network, Rational, RiderPreferences, Trip, TripVector,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational read from a JSON string (`"1/3"`, `"0.25"`) or number.
#[derive(Debug, Clone, PartialEq)]
pub struct Num(pub Rational);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "expected a rational, found {other}"
                )))
            }
        };
        parse_rational(&text)
            .map(Num)
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&to_exact_string(&self.0))
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub capacity: u64,
    pub travel_time: Num,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RiderDoc {
    pub id: String,
    pub alpha: Num,
    pub beta: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Num>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub nodes: Vec<String>,
    pub origin: String,
    pub destination: String,
    pub edges: Vec<EdgeDoc>,
    pub riders: Vec<RiderDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Num>>,
    pub delta: Num,
    pub car_capacity: usize,
}

/// Deserializes `text`, reporting the failing field path and position.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow!("{what}: at `{path}`: {inner}")
    })
}

impl InstanceDocument {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text, "instance")
    }

    pub fn into_instance(self, max_routes: usize) -> Result<MarketInstance> {
        let edges = self
            .edges
            .into_iter()
            .map(|e| Edge {
                id: e.id,
                from: e.from,
                to: e.to,
                capacity: e.capacity,
                travel_time: e.travel_time.0,
            })
            .collect();
        let network = Network::with_route_cap(
            self.nodes,
            &self.origin,
            &self.destination,
            edges,
            max_routes,
        )?;
        let per_rider = self.riders.iter().filter(|r| r.gamma.is_some()).count();
        let shared = match (&self.gamma, per_rider) {
            (Some(g), 0) => Some(g.clone()),
            (None, n) if n == self.riders.len() => None,
            (Some(_), _) => {
                bail!("instance: give either a shared `gamma` or one per rider, not both")
            }
            (None, _) => {
                bail!("instance: every rider needs `gamma` when no shared `gamma` is given")
            }
        };
        let riders = self
            .riders
            .into_iter()
            .map(|r| RiderPreferences {
                id: r.id,
                alpha: r.alpha.0,
                beta: r.beta.0,
                gamma: shared
                    .clone()
                    .or(r.gamma)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|n| n.0)
                    .collect(),
            })
            .collect();
        Ok(MarketInstance::new(
            network,
            riders,
            self.delta.0,
            self.car_capacity,
        )?)
    }

    /// Document for an existing instance, with a shared `gamma` when homogeneous.
    pub fn from_instance(instance: &MarketInstance) -> Self {
        let network = instance.network();
        let num = |v: &Rational| Num(v.clone());
        let shared = instance.is_homogeneous() && instance.num_riders() > 0;
        Self {
            nodes: network.nodes().to_vec(),
            origin: network.nodes()[network.origin()].clone(),
            destination: network.nodes()[network.destination()].clone(),
            edges: network
                .edges()
                .iter()
                .map(|e| EdgeDoc {
                    id: e.id.clone(),
                    from: e.from.clone(),
                    to: e.to.clone(),
                    capacity: e.capacity,
                    travel_time: num(&e.travel_time),
                })
                .collect(),
            riders: instance
                .riders()
                .iter()
                .map(|r| RiderDoc {
                    id: r.id.clone(),
                    alpha: num(&r.alpha),
                    beta: num(&r.beta),
                    gamma: (!shared).then(|| r.gamma.iter().map(num).collect()),
                })
                .collect(),
            gamma: shared.then(|| instance.rider(0).gamma.iter().map(num).collect()),
            delta: num(instance.delta()),
            car_capacity: instance.car_capacity(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct TripDoc {
    pub riders: Vec<String>,
    pub route: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Num>,
}

/// The part of a result document that `verify` reads.
#[derive(Debug, Clone, Deserialize)]
pub struct OutcomeDocument {
    pub trips: Vec<TripDoc>,
    pub payments: BTreeMap<String, Num>,
    pub tolls: BTreeMap<String, Num>,
}

impl OutcomeDocument {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text, "outcome")
    }

    pub fn into_outcome(self, instance: &MarketInstance) -> Result<Outcome> {
        let network = instance.network();
        let rider = |id: &str| {
            instance
                .rider_index(id)
                .ok_or_else(|| anyhow!("outcome: unknown rider id {id:?}"))
        };
        let mut trips = Vec::with_capacity(self.trips.len());
        for t in &self.trips {
            let route = (0..network.routes().len())
                .find(|&r| network.route_label(r) == t.route)
                .ok_or_else(|| anyhow!("outcome: unknown route {:?}", t.route))?;
            let members = t
                .riders
                .iter()
                .map(|id| rider(id))
                .collect::<Result<Vec<_>>>()?;
            if members.len() != t.riders.len() || Group::new(members.clone()).len() != members.len()
            {
                bail!("outcome: trip on {} lists a rider twice", t.route);
            }
            trips.push(Trip {
                route,
                group: Group::new(members),
            });
        }
        let mut payments = vec![None; instance.num_riders()];
        for (id, p) in self.payments {
            payments[rider(&id)?] = Some(p.0);
        }
        let payments = payments
            .into_iter()
            .enumerate()
            .map(|(m, p)| {
                p.with_context(|| {
                    format!("outcome: no payment for rider {:?}", instance.rider(m).id)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tolls = vec![None; network.edges().len()];
        for (id, t) in self.tolls {
            let e = network
                .edge_index(&id)
                .ok_or_else(|| anyhow!("outcome: unknown edge id {id:?}"))?;
            tolls[e] = Some(t.0);
        }
        let tolls = tolls
            .into_iter()
            .enumerate()
            .map(|(e, t)| {
                t.with_context(|| format!("outcome: no toll for edge {:?}", network.edge(e).id))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Outcome {
            trips: TripVector::new(trips),
            payments,
            tolls,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Equilibrium,
    NoEquilibrium,
    /// The computed outcome failed verification, as can happen when the
    /// auction is forced onto a network that is not series-parallel.
    VerificationFailed,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Dual,
    Vcg,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultDocument {
    pub status: Status,
    pub mechanism: Mechanism,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trips: Option<Vec<TripDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payments: Option<BTreeMap<String, Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolls: Option<BTreeMap<String, Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub utilities: Option<BTreeMap<String, Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterfactual_welfare: Option<BTreeMap<String, Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub welfare: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EquilibriumReport>,
    pub diagnostics: Diagnostics,
}

pub fn trip_docs(trips: &TripVector, instance: &MarketInstance) -> Result<Vec<TripDoc>> {
    trips
        .trips()
        .iter()
        .map(|t| {
            Ok(TripDoc {
                riders: t
                    .group
                    .members()
                    .iter()
                    .map(|&m| instance.rider(m).id.clone())
                    .collect(),
                route: instance.network().route_label(t.route),
                value: Some(Num(instance.social_trip_value(&t.group, t.route)?)),
            })
        })
        .collect()
}

pub fn by_rider(values: &[Rational], instance: &MarketInstance) -> BTreeMap<String, Num> {
    values
        .iter()
        .enumerate()
        .map(|(m, v)| (instance.rider(m).id.clone(), Num(v.clone())))
        .collect()
}

pub fn by_edge(values: &[Rational], instance: &MarketInstance) -> BTreeMap<String, Num> {
    instance
        .network()
        .edges()
        .iter()
        .zip(values)
        .map(|(e, v)| (e.id.clone(), Num(v.clone())))
        .collect()
}

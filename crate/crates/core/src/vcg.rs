//! The strategyproof equilibrium: VCG payments, the utilities they induce,
//! and a toll vector supporting them.

use num_traits::{One, Signed, Zero};

use crate::auction::{auction_trips, AuctionConfig};
use crate::equilibrium::{best_priced_group, Outcome, PaymentVector, TollVector, UtilityVector};
use crate::error::{CarpoolError, Result};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::network::{decompose_series_parallel, greedy_route_capacities, RouteCapacityVector};
use crate::preferences::{MarketInstance, RiderIdx};
use crate::rational::{self, Rational};
use crate::trips::TripVector;

#[derive(Debug, Clone, PartialEq)]
pub struct VcgResult {
    pub trips: TripVector,
    pub welfare: Rational,
    pub payments: PaymentVector,
    pub utilities: UtilityVector,
    pub tolls: TollVector,
    /// `S_{-m}(x^{-m*})` per rider.
    pub counterfactual_welfare: Vec<Rational>,
}

impl VcgResult {
    pub fn outcome(&self) -> Outcome {
        Outcome {
            trips: self.trips.clone(),
            payments: self.payments.clone(),
            tolls: self.tolls.clone(),
        }
    }
}

fn check_preconditions(instance: &MarketInstance) -> Result<()> {
    if !instance.is_homogeneous() {
        return Err(CarpoolError::HeterogeneousGamma);
    }
    if decompose_series_parallel(instance.network()).is_err() {
        return Err(CarpoolError::NotSeriesParallel);
    }
    Ok(())
}

/// Payments and utilities only; `tolls` is left empty.
pub fn vcg_payments(instance: &MarketInstance) -> Result<VcgResult> {
    check_preconditions(instance)?;
    let k = greedy_route_capacities(instance.network());
    vcg_payments_with(instance, &k, &AuctionConfig::default())
}

/// VCG payments with every counterfactual run on the same capacities `k`.
pub fn vcg_payments_with(
    instance: &MarketInstance,
    capacities: &RouteCapacityVector,
    config: &AuctionConfig,
) -> Result<VcgResult> {
    let everyone = instance.all_riders();
    let main = auction_trips(instance, capacities, &everyone, config)?;
    let welfare = main.welfare;
    let mut payments = Vec::with_capacity(everyone.len());
    let mut utilities = Vec::with_capacity(everyone.len());
    let mut counterfactual_welfare = Vec::with_capacity(everyone.len());
    for &m in &everyone {
        let others: Vec<RiderIdx> = everyone.iter().copied().filter(|&j| j != m).collect();
        let without = auction_trips(instance, capacities, &others, config)?.welfare;
        let u = &welfare - &without;
        if u.is_negative() {
            return Err(CarpoolError::NegativeUtility {
                rider: instance.rider(m).id.clone(),
                utility: rational::to_exact_string(&u),
            });
        }
        let v = main.trips.rider_value(instance, m)?;
        payments.push(&without - (&welfare - v));
        utilities.push(u);
        counterfactual_welfare.push(without);
    }
    Ok(VcgResult {
        trips: main.trips,
        welfare,
        payments,
        utilities,
        tolls: Vec::new(),
        counterfactual_welfare,
    })
}

/// Any nonnegative tolls with `tau(r) = max_b (V_r(b) - sum_b u)` on the
/// capacitated routes and `>=` elsewhere, zero on edges `trips` leaves slack.
pub fn vcg_tolls(
    instance: &MarketInstance,
    trips: &TripVector,
    utilities: &[Rational],
    capacities: &RouteCapacityVector,
) -> Result<TollVector> {
    let network = instance.network();
    let edges = network.edges().len();
    let everyone = instance.all_riders();
    let mut lp = LinearProgram::new(Sense::Minimize, vec![Rational::zero(); edges]);
    for (e, load) in trips.edge_loads(network).into_iter().enumerate() {
        if load < network.edge(e).capacity {
            lp.add_constraint(vec![(e, Rational::one())], Relation::Eq, Rational::zero());
        }
    }
    for r in 0..network.routes().len() {
        let demand = best_priced_group(instance, r, utilities, &everyone)?
            .map(|(_, v)| v)
            .filter(|v| v.is_positive())
            .unwrap_or_else(Rational::zero);
        let relation = if capacities.get(r) > 0 {
            Relation::Eq
        } else {
            Relation::Ge
        };
        let terms = network
            .route(r)
            .edges
            .iter()
            .map(|&e| (e, Rational::one()))
            .collect();
        lp.add_constraint(terms, relation, demand);
    }
    lp.solve()
        .optimal()
        .map(|s| s.values)
        .ok_or(CarpoolError::LinearProgram("toll system is infeasible"))
}

/// VCG payments, utilities and tolls.
pub fn vcg_equilibrium(instance: &MarketInstance) -> Result<VcgResult> {
    check_preconditions(instance)?;
    let k = greedy_route_capacities(instance.network());
    let mut result = vcg_payments_with(instance, &k, &AuctionConfig::default())?;
    result.tolls = vcg_tolls(instance, &result.trips, &result.utilities, &k)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub truthful: Rational,
    /// True utility of the rider under the outcome computed from the misreport.
    pub misreport: Rational,
}

impl ProbeResult {
    pub fn is_profitable(&self) -> bool {
        self.misreport > self.truthful
    }
}

/// Misreport probes against one truthful VCG run.
///
/// A rider's counterfactual welfare `S_{-m}` does not depend on their own
/// report, so each probe needs a single auction on the misreported market.
pub struct Prober<'a> {
    instance: &'a MarketInstance,
    capacities: RouteCapacityVector,
    truthful: VcgResult,
}

impl<'a> Prober<'a> {
    pub fn new(instance: &'a MarketInstance) -> Result<Self> {
        check_preconditions(instance)?;
        let capacities = greedy_route_capacities(instance.network());
        let truthful = vcg_payments_with(instance, &capacities, &AuctionConfig::default())?;
        Ok(Prober {
            instance,
            capacities,
            truthful,
        })
    }

    pub fn truthful(&self) -> &VcgResult {
        &self.truthful
    }

    /// Rider `m` reports `(alpha, beta)`; the result is evaluated at `m`'s
    /// true preferences.
    pub fn probe(&self, m: RiderIdx, alpha: Rational, beta: Rational) -> Result<ProbeResult> {
        let instance = self.instance;
        if m >= instance.num_riders() {
            return Err(CarpoolError::UnknownId {
                kind: "rider",
                id: m.to_string(),
            });
        }
        if beta.is_negative() {
            return Err(CarpoolError::InvalidInstance(
                "misreported beta must be nonnegative".into(),
            ));
        }
        let mut riders = instance.riders().to_vec();
        riders[m].alpha = alpha;
        riders[m].beta = beta;
        let lie = instance.with_riders(riders)?;
        let run = auction_trips(
            &lie,
            &self.capacities,
            &lie.all_riders(),
            &AuctionConfig::default(),
        )?;
        let reported = run.trips.rider_value(&lie, m)?;
        let payment = &self.truthful.counterfactual_welfare[m] - (&run.welfare - reported);
        Ok(ProbeResult {
            truthful: self.truthful.utilities[m].clone(),
            misreport: run.trips.rider_value(instance, m)? - payment,
        })
    }
}

/// Recomputes the VCG outcome with rider `m` reporting `(alpha, beta)` and
/// evaluates it at `m`'s true preferences.
pub fn strategyproofness_probe(
    instance: &MarketInstance,
    m: RiderIdx,
    alpha: Rational,
    beta: Rational,
) -> Result<ProbeResult> {
    Prober::new(instance)?.probe(m, alpha, beta)
}

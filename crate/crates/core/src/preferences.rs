//! Rider preferences, trip values and the augmented (monotone) value function.

use std::collections::HashSet;

use num_traits::{Signed, Zero};

use crate::error::{CarpoolError, Result};
use crate::network::{Network, RouteIdx};
use crate::rational::Rational;

pub type RiderIdx = usize;

/// Enumeration guard for the monotonicity checker.
pub const MONOTONICITY_MAX_RIDERS: usize = 12;
/// Enumeration guard for the gross-substitutes checker.
pub const GROSS_SUBSTITUTES_MAX_RIDERS: usize = 8;

/// A sorted, duplicate-free set of rider indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Group(Vec<RiderIdx>);

impl Group {
    pub fn new(mut riders: Vec<RiderIdx>) -> Self {
        riders.sort_unstable();
        riders.dedup();
        Group(riders)
    }

    pub fn members(&self) -> &[RiderIdx] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, m: RiderIdx) -> bool {
        self.0.binary_search(&m).is_ok()
    }
}

impl From<Vec<RiderIdx>> for Group {
    fn from(v: Vec<RiderIdx>) -> Self {
        Group::new(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiderPreferences {
    pub id: String,
    /// Value of arriving at the destination.
    pub alpha: Rational,
    /// Value of time per unit of travel time.
    pub beta: Rational,
    /// `gamma[d - 1]` is the carpool disutility per unit time in a car of `d` riders.
    pub gamma: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketInstance {
    network: Network,
    riders: Vec<RiderPreferences>,
    delta: Rational,
    car_capacity: usize,
    homogeneous: bool,
}

/// Common-disutility form of the values: `V_r(b) = sum eta_r^m - theta(|b|) t_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousValueParams {
    /// `theta[d] = d * gamma(d) + delta * d` for `d = 0..=A`.
    pub theta: Vec<Rational>,
}

impl HomogeneousValueParams {
    /// Marginal cost rate of growing a car from `d` to `d + 1` riders; `None` at capacity.
    pub fn marginal(&self, d: usize) -> Option<Rational> {
        (d + 1 < self.theta.len()).then(|| &self.theta[d + 1] - &self.theta[d])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeGroup {
    pub route: RouteIdx,
    pub base: Group,
    pub chosen: Group,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub smaller: Group,
    pub larger: Group,
    pub smaller_value: Rational,
    pub larger_value: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GsViolation {
    /// `V(i | larger) > V(i | smaller)` with `smaller ⊆ larger`.
    Submodularity {
        smaller: Group,
        larger: Group,
        rider: RiderIdx,
    },
    /// The three-rider exchange inequality fails at `base` for `(i, j, k)`.
    Exchange {
        base: Group,
        i: RiderIdx,
        j: RiderIdx,
        k: RiderIdx,
    },
}

impl MarketInstance {
    pub fn new(
        network: Network,
        riders: Vec<RiderPreferences>,
        delta: Rational,
        car_capacity: usize,
    ) -> Result<Self> {
        let invalid = |m: String| CarpoolError::InvalidInstance(m);
        if car_capacity == 0 {
            return Err(invalid("car capacity must be at least 1".into()));
        }
        if delta.is_negative() {
            return Err(invalid("trip cost rate delta must be nonnegative".into()));
        }
        let mut ids = HashSet::new();
        for r in &riders {
            if !ids.insert(r.id.as_str()) {
                return Err(invalid(format!("duplicate rider id {:?}", r.id)));
            }
            if r.beta.is_negative() {
                return Err(invalid(format!("rider {:?} has negative beta", r.id)));
            }
            if r.gamma.len() != car_capacity {
                return Err(invalid(format!(
                    "rider {:?} has {} disutility entries, expected {car_capacity}",
                    r.id,
                    r.gamma.len()
                )));
            }
            if !r.gamma[0].is_zero() {
                return Err(invalid(format!(
                    "rider {:?}: solo disutility must be zero",
                    r.id
                )));
            }
            if r.gamma.iter().any(|g| g.is_negative()) {
                return Err(invalid(format!("rider {:?}: negative disutility", r.id)));
            }
            for d in 2..car_capacity {
                let prev = &r.gamma[d - 1] - &r.gamma[d - 2];
                let next = &r.gamma[d] - &r.gamma[d - 1];
                if next < prev {
                    return Err(invalid(format!(
                        "rider {:?}: marginal disutility must be non-decreasing in group size",
                        r.id
                    )));
                }
            }
        }
        let homogeneous = riders.windows(2).all(|w| w[0].gamma == w[1].gamma);
        let instance = Self {
            network,
            riders,
            delta,
            car_capacity,
            homogeneous,
        };
        if let Some(params) = instance.homogeneous_params() {
            let steps: Vec<Rational> = (0..car_capacity)
                .filter_map(|d| params.marginal(d))
                .collect();
            debug_assert!(steps.windows(2).all(|w| w[0] <= w[1]));
        }
        Ok(instance)
    }

    /// Same network and cost parameters with a different rider profile.
    pub fn with_riders(&self, riders: Vec<RiderPreferences>) -> Result<Self> {
        Self::new(
            self.network.clone(),
            riders,
            self.delta.clone(),
            self.car_capacity,
        )
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn riders(&self) -> &[RiderPreferences] {
        &self.riders
    }

    pub fn rider(&self, m: RiderIdx) -> &RiderPreferences {
        &self.riders[m]
    }

    pub fn num_riders(&self) -> usize {
        self.riders.len()
    }

    pub fn all_riders(&self) -> Vec<RiderIdx> {
        (0..self.riders.len()).collect()
    }

    pub fn rider_index(&self, id: &str) -> Option<RiderIdx> {
        self.riders.iter().position(|r| r.id == id)
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn car_capacity(&self) -> usize {
        self.car_capacity
    }

    /// True iff every rider has the same disutility schedule.
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    fn travel_time(&self, r: RouteIdx) -> &Rational {
        &self.network.route(r).travel_time
    }

    fn check_group(&self, group: &Group) -> Result<()> {
        if group.is_empty() {
            return Err(CarpoolError::EmptyGroup);
        }
        if group.len() > self.car_capacity {
            return Err(CarpoolError::GroupTooLarge {
                size: group.len(),
                capacity: self.car_capacity,
            });
        }
        Ok(())
    }

    /// `alpha - beta t_r - gamma(|b|) t_r` for rider `m` riding with `group`.
    pub fn rider_trip_value(&self, m: RiderIdx, group: &Group, r: RouteIdx) -> Result<Rational> {
        if !group.contains(m) {
            return Err(CarpoolError::RiderNotInGroup { rider: m });
        }
        self.check_group(group)?;
        let p = &self.riders[m];
        let t = self.travel_time(r);
        Ok(&p.alpha - &p.beta * t - &p.gamma[group.len() - 1] * t)
    }

    /// Sum of the members' trip values net of the trip cost `delta |b| t_r`.
    pub fn social_trip_value(&self, group: &Group, r: RouteIdx) -> Result<Rational> {
        self.check_group(group)?;
        Ok(self.base_value(group) - self.sensitivity(group) * self.travel_time(r))
    }

    /// `z(b)`: the travel-time-independent part of a group's value.
    pub fn base_value(&self, group: &Group) -> Rational {
        group
            .members()
            .iter()
            .map(|&m| self.riders[m].alpha.clone())
            .sum()
    }

    /// `g(b)`: the group's value lost per unit of travel time.
    pub fn sensitivity(&self, group: &Group) -> Rational {
        let d = group.len();
        let mut g = &self.delta * Rational::from_integer(d.into());
        for &m in group.members() {
            let p = &self.riders[m];
            g += &p.beta;
            if d > 0 {
                g += &p.gamma[d - 1];
            }
        }
        g
    }

    pub fn homogeneous_params(&self) -> Option<HomogeneousValueParams> {
        if !self.homogeneous {
            return None;
        }
        let gamma = self
            .riders
            .first()
            .map(|r| r.gamma.clone())
            .unwrap_or_else(|| vec![Rational::zero(); self.car_capacity]);
        let theta = (0..=self.car_capacity)
            .map(|d| {
                let size = Rational::from_integer(d.into());
                if d == 0 {
                    Rational::zero()
                } else {
                    &size * &gamma[d - 1] + &self.delta * &size
                }
            })
            .collect();
        Some(HomogeneousValueParams { theta })
    }

    /// `eta_r^m = alpha^m - beta^m t_r`.
    pub fn eta(&self, m: RiderIdx, r: RouteIdx) -> Rational {
        let p = &self.riders[m];
        &p.alpha - &p.beta * self.travel_time(r)
    }

    /// Best value of a feasible subset of `base` on route `r`, with the subset.
    ///
    /// The empty subset counts (value zero), so the result is monotone in
    /// `base`. Under homogeneous disutility riders are taken greedily in
    /// decreasing `eta` (ties by lowest index) while the marginal test
    /// `eta >= (theta(h+1) - theta(h)) t_r` holds; otherwise all subsets are
    /// enumerated.
    pub fn augmented_value(
        &self,
        base: &[RiderIdx],
        r: RouteIdx,
    ) -> (Rational, RepresentativeGroup) {
        match self.homogeneous_params() {
            Some(params) => self.greedy_augmented_value(&params, base, r),
            None => self.exhaustive_augmented_value(base, r),
        }
    }

    fn greedy_augmented_value(
        &self,
        params: &HomogeneousValueParams,
        base: &[RiderIdx],
        r: RouteIdx,
    ) -> (Rational, RepresentativeGroup) {
        let t = self.travel_time(r);
        let mut order: Vec<(Rational, RiderIdx)> =
            base.iter().map(|&m| (self.eta(m, r), m)).collect();
        order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut chosen = Vec::new();
        let mut total = Rational::zero();
        for (eta, m) in order {
            let Some(step) = params.marginal(chosen.len()) else {
                break;
            };
            if eta < step * t {
                break;
            }
            total += eta;
            chosen.push(m);
        }
        let value = total - &params.theta[chosen.len()] * t;
        let rep = RepresentativeGroup {
            route: r,
            base: Group::new(base.to_vec()),
            chosen: Group::new(chosen),
        };
        (value, rep)
    }

    /// Enumerates every subset of `base` of size at most `A`; ties go to the
    /// lexicographically smallest member list.
    pub fn exhaustive_augmented_value(
        &self,
        base: &[RiderIdx],
        r: RouteIdx,
    ) -> (Rational, RepresentativeGroup) {
        let base = Group::new(base.to_vec());
        let mut best = (Rational::zero(), Group::default());
        for_each_subset(base.members(), self.car_capacity, &mut |subset| {
            if subset.is_empty() {
                return;
            }
            let group = Group(subset.to_vec());
            let value = self.social_trip_value(&group, r).expect("size checked");
            if value > best.0 || (value == best.0 && group < best.1) {
                best = (value, group);
            }
        });
        let (value, chosen) = best;
        (
            value,
            RepresentativeGroup {
                route: r,
                base,
                chosen,
            },
        )
    }

    /// Every feasible group (size `1..=A`) drawn from `universe`, in
    /// lexicographic order.
    pub fn feasible_groups(&self, universe: &[RiderIdx]) -> Vec<Group> {
        let universe = Group::new(universe.to_vec());
        let mut out = Vec::new();
        for_each_subset(universe.members(), self.car_capacity, &mut |s| {
            if !s.is_empty() {
                out.push(Group(s.to_vec()));
            }
        });
        out.sort();
        out
    }

    /// Augmented values of every subset of `universe`, indexed by bitmask over
    /// the sorted universe.
    fn augmented_table(&self, universe: &[RiderIdx], r: RouteIdx) -> Vec<Rational> {
        (0..1usize << universe.len())
            .map(|mask| self.augmented_value(&subset_of(universe, mask), r).0)
            .collect()
    }

    /// Checks `V(b ∪ b') >= V(b)` for the augmented values on route `r`.
    /// Single-rider additions generate every union, so only those are tested.
    pub fn check_monotonicity(
        &self,
        r: RouteIdx,
        universe: &[RiderIdx],
    ) -> Result<Option<MonotonicityViolation>> {
        let universe = Group::new(universe.to_vec());
        let u = universe.members();
        guard(u.len(), MONOTONICITY_MAX_RIDERS)?;
        let table = self.augmented_table(u, r);
        for mask in 0..table.len() {
            for bit in 0..u.len() {
                let larger = mask | (1 << bit);
                if larger != mask && table[larger] < table[mask] {
                    return Ok(Some(MonotonicityViolation {
                        smaller: Group(subset_of(u, mask)),
                        larger: Group(subset_of(u, larger)),
                        smaller_value: table[mask].clone(),
                        larger_value: table[larger].clone(),
                    }));
                }
            }
        }
        Ok(None)
    }

    /// Monotonicity of the raw value over feasible groups:
    /// `V(b ∪ {i}) >= V(b)` whenever `|b ∪ {i}| <= A`.
    pub fn check_raw_monotonicity(
        &self,
        r: RouteIdx,
        universe: &[RiderIdx],
    ) -> Result<Option<MonotonicityViolation>> {
        let universe = Group::new(universe.to_vec());
        guard(universe.len(), MONOTONICITY_MAX_RIDERS)?;
        for group in self.feasible_groups(universe.members()) {
            if group.len() == self.car_capacity {
                continue;
            }
            let v = self.social_trip_value(&group, r)?;
            for &i in universe.members() {
                if group.contains(i) {
                    continue;
                }
                let mut bigger = group.members().to_vec();
                bigger.push(i);
                let bigger = Group::new(bigger);
                let w = self.social_trip_value(&bigger, r)?;
                if w < v {
                    return Ok(Some(MonotonicityViolation {
                        smaller: group,
                        larger: bigger,
                        smaller_value: v,
                        larger_value: w,
                    }));
                }
            }
        }
        Ok(None)
    }

    /// Enumeration check of submodularity (a) and the three-rider exchange
    /// inequality (b) for the augmented value on route `r`.
    pub fn check_gross_substitutes(
        &self,
        r: RouteIdx,
        universe: &[RiderIdx],
    ) -> Result<Option<GsViolation>> {
        Ok(self
            .check_submodularity(r, universe)?
            .or(self.check_exchange(r, universe)?))
    }

    /// Condition (a): `V(b ∪ {i}) - V(b) >= V(b' ∪ {i}) - V(b')` for `b ⊆ b'`.
    pub fn check_submodularity(
        &self,
        r: RouteIdx,
        universe: &[RiderIdx],
    ) -> Result<Option<GsViolation>> {
        let universe = Group::new(universe.to_vec());
        let u = universe.members();
        guard(u.len(), GROSS_SUBSTITUTES_MAX_RIDERS)?;
        let n = u.len();
        let table = self.augmented_table(u, r);
        let gain = |add: usize, base: usize| &table[base | add] - &table[base];
        for larger in 0..table.len() {
            let mut smaller = larger;
            loop {
                for bit in 0..n {
                    let i = 1 << bit;
                    if larger & i == 0 && gain(i, larger) > gain(i, smaller) {
                        return Ok(Some(GsViolation::Submodularity {
                            smaller: Group(subset_of(u, smaller)),
                            larger: Group(subset_of(u, larger)),
                            rider: u[bit],
                        }));
                    }
                }
                if smaller == 0 {
                    break;
                }
                smaller = (smaller - 1) & larger;
            }
        }

        Ok(None)
    }

    /// Condition (b): `V(b+ij) + V(b+k) <= max(V(b+ik) + V(b+j), V(b+jk) + V(b+i))`
    /// for distinct `i, j, k` outside `b`, in marginal form.
    pub fn check_exchange(
        &self,
        r: RouteIdx,
        universe: &[RiderIdx],
    ) -> Result<Option<GsViolation>> {
        let universe = Group::new(universe.to_vec());
        let u = universe.members();
        guard(u.len(), GROSS_SUBSTITUTES_MAX_RIDERS)?;
        let n = u.len();
        let table = self.augmented_table(u, r);
        let gain = |add: usize, base: usize| &table[base | add] - &table[base];
        for base in 0..table.len() {
            let outside: Vec<usize> = (0..n).filter(|b| base & (1 << b) == 0).collect();
            for &bi in &outside {
                for &bj in &outside {
                    for &bk in &outside {
                        if bi == bj || bj == bk || bi == bk {
                            continue;
                        }
                        let (i, j, k) = (1 << bi, 1 << bj, 1 << bk);
                        let lhs = gain(i | j, base) + gain(k, base);
                        let left = gain(i, base) + gain(j | k, base);
                        let right = gain(j, base) + gain(i | k, base);
                        if lhs > left.max(right) {
                            return Ok(Some(GsViolation::Exchange {
                                base: Group(subset_of(u, base)),
                                i: u[bi],
                                j: u[bj],
                                k: u[bk],
                            }));
                        }
                    }
                }
            }
        }
        Ok(None)
    }
}

fn guard(actual: usize, limit: usize) -> Result<()> {
    if actual > limit {
        return Err(CarpoolError::TooLarge {
            what: "rider universe",
            actual,
            limit,
        });
    }
    Ok(())
}

fn subset_of(universe: &[RiderIdx], mask: usize) -> Vec<RiderIdx> {
    universe
        .iter()
        .enumerate()
        .filter(|(b, _)| mask & (1 << b) != 0)
        .map(|(_, &m)| m)
        .collect()
}

/// Calls `f` on every subset of `items` with at most `max_size` elements
/// (including the empty one); subsets preserve the order of `items`.
pub(crate) fn for_each_subset(items: &[RiderIdx], max_size: usize, f: &mut dyn FnMut(&[RiderIdx])) {
    fn rec(
        items: &[RiderIdx],
        start: usize,
        max_size: usize,
        cur: &mut Vec<RiderIdx>,
        f: &mut dyn FnMut(&[RiderIdx]),
    ) {
        f(cur);
        if cur.len() == max_size {
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, i + 1, max_size, cur, f);
            cur.pop();
        }
    }
    rec(items, 0, max_size, &mut Vec::new(), f);
}

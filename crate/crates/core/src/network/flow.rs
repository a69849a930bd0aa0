use std::collections::VecDeque;

use super::{Network, RouteIdx};

/// Integer capacity assigned to each route by the greedy allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteCapacityVector {
    /// Indexed like `Network::routes`.
    pub capacities: Vec<u64>,
}

impl RouteCapacityVector {
    pub fn get(&self, r: RouteIdx) -> u64 {
        self.capacities[r]
    }

    pub fn total(&self) -> u64 {
        self.capacities.iter().sum()
    }

    /// Routes with positive capacity, in route order.
    pub fn support(&self) -> Vec<RouteIdx> {
        (0..self.capacities.len())
            .filter(|&r| self.capacities[r] > 0)
            .collect()
    }

    /// Whether `sum over routes through e of k_r <= q_e` for every edge.
    pub fn is_feasible(&self, network: &Network) -> bool {
        let mut load = vec![0u64; network.edges().len()];
        for (r, &k) in self.capacities.iter().enumerate() {
            for &e in &network.route(r).edges {
                load[e] += k;
            }
        }
        load.iter()
            .zip(network.edges())
            .all(|(l, e)| *l <= e.capacity)
    }
}

/// Repeatedly saturates the shortest route that still has residual capacity
/// on all of its edges. Ties go to the lexicographically smallest edge-index
/// sequence. Each round exhausts at least one edge, so there are at most |E|
/// rounds.
pub fn greedy_route_capacities(network: &Network) -> RouteCapacityVector {
    let mut residual: Vec<u64> = network.edges().iter().map(|e| e.capacity).collect();
    let mut capacities = vec![0u64; network.routes().len()];
    loop {
        // Routes are stored in lexicographic order, so the first minimum wins ties.
        let shortest = network
            .routes()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.edges.iter().all(|&e| residual[e] > 0))
            .min_by(|(_, a), (_, b)| a.travel_time.cmp(&b.travel_time));
        let Some((r, route)) = shortest else { break };
        let amount = route.edges.iter().map(|&e| residual[e]).min().unwrap_or(0);
        for &e in &route.edges {
            residual[e] -= amount;
        }
        capacities[r] += amount;
    }
    RouteCapacityVector { capacities }
}

/// Maximum origin-destination flow under the edge capacities (Edmonds-Karp).
pub fn network_capacity(network: &Network) -> u64 {
    let n = network.nodes().len();
    // Residual arcs: (to, capacity, index of reverse arc).
    let mut graph: Vec<Vec<(usize, u64, usize)>> = vec![Vec::new(); n];
    for (e, edge) in network.edges().iter().enumerate() {
        let (u, v) = network.endpoints(e);
        let (iu, iv) = (graph[u].len(), graph[v].len());
        graph[u].push((v, edge.capacity, iv));
        graph[v].push((u, 0, iu));
    }
    let (s, t) = (network.origin(), network.destination());
    let mut flow = 0;
    loop {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut queue = VecDeque::from([s]);
        let mut reached = vec![false; n];
        reached[s] = true;
        while let Some(u) = queue.pop_front() {
            for (i, &(v, cap, _)) in graph[u].iter().enumerate() {
                if cap > 0 && !reached[v] {
                    reached[v] = true;
                    parent[v] = Some((u, i));
                    queue.push_back(v);
                }
            }
        }
        if !reached[t] {
            return flow;
        }
        let mut bottleneck = u64::MAX;
        let mut v = t;
        while let Some((u, i)) = parent[v] {
            bottleneck = bottleneck.min(graph[u][i].1);
            v = u;
        }
        let mut v = t;
        while let Some((u, i)) = parent[v] {
            graph[u][i].1 -= bottleneck;
            let back = graph[u][i].2;
            graph[v][back].1 += bottleneck;
            v = u;
        }
        flow += bottleneck;
    }
}

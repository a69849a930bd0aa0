//! Two-terminal capacitated networks and their route sets.

mod flow;
mod series_parallel;

use std::collections::{HashMap, HashSet};

use num_traits::{Signed, Zero};

use crate::error::{CarpoolError, Result};
use crate::rational::Rational;

pub use flow::{greedy_route_capacities, network_capacity, RouteCapacityVector};
pub use series_parallel::{decompose_series_parallel, NotSeriesParallel, SpTree};

/// Default bound on the number of enumerated routes.
pub const DEFAULT_MAX_ROUTES: usize = 10_000;

pub type EdgeIdx = usize;
pub type RouteIdx = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Number of vehicles the edge admits.
    pub capacity: u64,
    pub travel_time: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Route {
    /// Edge indices in path order.
    pub edges: Vec<EdgeIdx>,
    pub travel_time: Rational,
}

impl Route {
    pub fn contains(&self, edge: EdgeIdx) -> bool {
        self.edges.contains(&edge)
    }
}

/// A validated network together with its full origin-destination route set.
///
/// Routes are the simple directed origin→destination paths, ordered
/// lexicographically by their sequence of edge indices (the position of each
/// edge in the input). That order is the tie-break used throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<String>,
    origin: usize,
    destination: usize,
    edges: Vec<Edge>,
    endpoints: Vec<(usize, usize)>,
    routes: Vec<Route>,
}

impl Network {
    pub fn new(
        nodes: Vec<String>,
        origin: &str,
        destination: &str,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        Self::with_route_cap(nodes, origin, destination, edges, DEFAULT_MAX_ROUTES)
    }

    pub fn with_route_cap(
        nodes: Vec<String>,
        origin: &str,
        destination: &str,
        edges: Vec<Edge>,
        max_routes: usize,
    ) -> Result<Self> {
        let invalid = |msg: String| CarpoolError::InvalidNetwork(msg);
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.as_str(), i).is_some() {
                return Err(invalid(format!("duplicate node {n:?}")));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| invalid(format!("unknown node {name:?}")))
        };
        let origin = lookup(origin)?;
        let destination = lookup(destination)?;
        if origin == destination {
            return Err(invalid("origin and destination coincide".into()));
        }
        let mut seen = HashSet::new();
        let mut endpoints = Vec::with_capacity(edges.len());
        for e in &edges {
            if !seen.insert(e.id.as_str()) {
                return Err(invalid(format!("duplicate edge id {:?}", e.id)));
            }
            if e.capacity == 0 {
                return Err(invalid(format!("edge {:?} has zero capacity", e.id)));
            }
            if e.travel_time.is_negative() {
                return Err(invalid(format!("edge {:?} has negative travel time", e.id)));
            }
            let (u, v) = (lookup(&e.from)?, lookup(&e.to)?);
            if u == v {
                return Err(invalid(format!("edge {:?} is a self-loop", e.id)));
            }
            endpoints.push((u, v));
        }
        let mut network = Self {
            nodes,
            origin,
            destination,
            edges,
            endpoints,
            routes: Vec::new(),
        };
        network.routes = network.enumerate_routes(max_routes)?;
        if network.routes.is_empty() {
            return Err(invalid("no route from origin to destination".into()));
        }
        let mut covered = vec![false; network.edges.len()];
        for r in &network.routes {
            for &e in &r.edges {
                covered[e] = true;
            }
        }
        if let Some(e) = covered.iter().position(|c| !c) {
            return Err(invalid(format!(
                "edge {:?} lies on no origin-destination route",
                network.edges[e].id
            )));
        }
        Ok(network)
    }

    /// All simple origin→destination paths in lexicographic edge-index order.
    fn enumerate_routes(&self, max_routes: usize) -> Result<Vec<Route>> {
        let mut out_edges = vec![Vec::new(); self.nodes.len()];
        for (i, &(u, _)) in self.endpoints.iter().enumerate() {
            out_edges[u].push(i);
        }
        let mut routes = Vec::new();
        let mut on_path = vec![false; self.nodes.len()];
        let mut path = Vec::new();
        on_path[self.origin] = true;
        self.dfs(
            self.origin,
            &out_edges,
            &mut on_path,
            &mut path,
            &mut routes,
            max_routes,
        )?;
        routes.sort();
        Ok(routes)
    }

    fn dfs(
        &self,
        node: usize,
        out_edges: &[Vec<EdgeIdx>],
        on_path: &mut [bool],
        path: &mut Vec<EdgeIdx>,
        routes: &mut Vec<Route>,
        max_routes: usize,
    ) -> Result<()> {
        if node == self.destination {
            if routes.len() == max_routes {
                return Err(CarpoolError::TooLarge {
                    what: "route count",
                    actual: max_routes + 1,
                    limit: max_routes,
                });
            }
            let travel_time = path
                .iter()
                .map(|&e| self.edges[e].travel_time.clone())
                .sum();
            routes.push(Route {
                edges: path.clone(),
                travel_time,
            });
            return Ok(());
        }
        for &e in &out_edges[node] {
            let next = self.endpoints[e].1;
            if on_path[next] {
                continue;
            }
            on_path[next] = true;
            path.push(e);
            self.dfs(next, out_edges, on_path, path, routes, max_routes)?;
            path.pop();
            on_path[next] = false;
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeIdx) -> &Edge {
        &self.edges[e]
    }

    /// `(from, to)` node indices of an edge.
    pub fn endpoints(&self, e: EdgeIdx) -> (usize, usize) {
        self.endpoints[e]
    }

    pub fn edge_index(&self, id: &str) -> Option<EdgeIdx> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route(&self, r: RouteIdx) -> &Route {
        &self.routes[r]
    }

    pub fn route_index(&self, edges: &[EdgeIdx]) -> Option<RouteIdx> {
        self.routes.iter().position(|r| r.edges == edges)
    }

    /// Human-readable route label such as `e1-e5-e4`.
    pub fn route_label(&self, r: RouteIdx) -> String {
        self.routes[r]
            .edges
            .iter()
            .map(|&e| self.edges[e].id.as_str())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Sum of `values[e]` over the edges of route `r`.
    pub fn route_sum(&self, r: RouteIdx, values: &[Rational]) -> Rational {
        self.routes[r]
            .edges
            .iter()
            .fold(Rational::zero(), |acc, &e| acc + &values[e])
    }
}

/// Free-function form of the route enumeration.
pub fn enumerate_routes(network: &Network) -> &[Route] {
    network.routes()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rational::int;

    pub(crate) fn edge(id: &str, from: &str, to: &str, capacity: u64, t: i64) -> Edge {
        Edge {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            capacity,
            travel_time: int(t),
        }
    }

    pub(crate) fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn wheatstone() -> Network {
        Network::new(
            names(&["o", "a", "b", "d"]),
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
        .unwrap()
    }

    /// Independent path counter: exhaustive DFS over node sequences.
    fn count_paths(n: &Network) -> usize {
        fn go(n: &Network, node: usize, visited: &mut Vec<usize>) -> usize {
            if node == n.destination() {
                return 1;
            }
            let mut total = 0;
            for e in 0..n.edges().len() {
                let (u, v) = n.endpoints(e);
                if u == node && !visited.contains(&v) {
                    visited.push(v);
                    total += go(n, v, visited);
                    visited.pop();
                }
            }
            total
        }
        go(n, n.origin(), &mut vec![n.origin()])
    }

    #[test]
    fn wheatstone_routes() {
        let n = wheatstone();
        let labels: Vec<_> = (0..n.routes().len()).map(|r| n.route_label(r)).collect();
        assert_eq!(labels, ["e1-e2", "e1-e5-e4", "e3-e4"]);
        let times: Vec<_> = n.routes().iter().map(|r| r.travel_time.clone()).collect();
        assert_eq!(times, [int(4), int(2), int(4)]);
    }

    #[test]
    fn single_edge() {
        let n = Network::new(
            names(&["o", "d"]),
            "o",
            "d",
            vec![edge("e", "o", "d", 1, 1)],
        )
        .unwrap();
        assert_eq!(n.routes().len(), 1);
        assert_eq!(n.routes()[0].travel_time, int(1));
    }

    #[test]
    fn parallel_edges_match_dfs_oracle() {
        let n = Network::new(
            names(&["o", "d"]),
            "o",
            "d",
            vec![
                edge("a", "o", "d", 1, 1),
                edge("b", "o", "d", 1, 2),
                edge("c", "o", "d", 2, 3),
            ],
        )
        .unwrap();
        assert_eq!(n.routes().len(), 3);
        assert_eq!(count_paths(&n), 3);
        assert_eq!(count_paths(&wheatstone()), wheatstone().routes().len());
    }

    #[test]
    fn rejects_bad_networks() {
        let bad = [
            Network::new(
                names(&["o", "d", "x"]),
                "o",
                "d",
                vec![edge("e", "o", "d", 1, 1), edge("f", "d", "x", 1, 1)],
            ),
            Network::new(
                names(&["o", "d"]),
                "o",
                "d",
                vec![edge("e", "o", "d", 0, 1)],
            ),
            Network::new(
                names(&["o", "d"]),
                "o",
                "o",
                vec![edge("e", "o", "d", 1, 1)],
            ),
            Network::new(
                names(&["o", "d"]),
                "o",
                "d",
                vec![edge("e", "o", "q", 1, 1)],
            ),
            Network::new(
                names(&["o", "d"]),
                "o",
                "d",
                vec![edge("e", "o", "d", 1, 1), edge("e", "o", "d", 1, 1)],
            ),
            Network::new(
                names(&["o", "d"]),
                "o",
                "d",
                vec![edge("e", "o", "d", 1, -1)],
            ),
            Network::new(names(&["o", "d"]), "o", "d", vec![]),
            Network::new(
                names(&["o", "d"]),
                "o",
                "d",
                vec![edge("e", "d", "o", 1, 1)],
            ),
        ];
        for b in bad {
            assert!(b.is_err());
        }
    }

    #[test]
    fn route_cap_guard() {
        let edges: Vec<_> = (0..5)
            .map(|i| edge(&format!("e{i}"), "o", "d", 1, 1))
            .collect();
        let err = Network::with_route_cap(names(&["o", "d"]), "o", "d", edges, 4).unwrap_err();
        assert!(matches!(err, CarpoolError::TooLarge { limit: 4, .. }));
    }

    #[test]
    fn zero_time_route_allowed() {
        let n = Network::new(
            names(&["o", "d"]),
            "o",
            "d",
            vec![edge("e", "o", "d", 1, 0)],
        )
        .unwrap();
        assert!(n.routes()[0].travel_time.is_zero());
    }
}

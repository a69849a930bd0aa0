//! Series-parallel recognition by exhaustive series and parallel reductions.

use std::collections::BTreeMap;

use super::{EdgeIdx, Network};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpTree {
    Leaf(EdgeIdx),
    /// Children in path order from origin to destination.
    Series(Vec<SpTree>),
    Parallel(Vec<SpTree>),
}

impl SpTree {
    /// Edge indices of all leaves, left to right.
    pub fn edges(&self) -> Vec<EdgeIdx> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<EdgeIdx>) {
        match self {
            SpTree::Leaf(e) => out.push(*e),
            SpTree::Series(c) | SpTree::Parallel(c) => c.iter().for_each(|t| t.collect(out)),
        }
    }

    fn series(a: SpTree, b: SpTree) -> SpTree {
        let mut children = Vec::new();
        for t in [a, b] {
            match t {
                SpTree::Series(c) => children.extend(c),
                other => children.push(other),
            }
        }
        SpTree::Series(children)
    }

    fn parallel(parts: Vec<SpTree>) -> SpTree {
        let mut children = Vec::new();
        for t in parts {
            match t {
                SpTree::Parallel(c) => children.extend(c),
                other => children.push(other),
            }
        }
        SpTree::Parallel(children)
    }

    /// Renders with edge ids, e.g. `P(S(e1, e2), e3)`.
    pub fn render(&self, network: &Network) -> String {
        match self {
            SpTree::Leaf(e) => network.edge(*e).id.clone(),
            SpTree::Series(c) => format!(
                "S({})",
                c.iter()
                    .map(|t| t.render(network))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            SpTree::Parallel(c) => format!(
                "P({})",
                c.iter()
                    .map(|t| t.render(network))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    }
}

/// The reductions got stuck; `witness` lists the original edges of the
/// irreducible remainder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotSeriesParallel {
    pub witness: Vec<EdgeIdx>,
}

struct Arc {
    from: usize,
    to: usize,
    tree: SpTree,
}

pub fn decompose_series_parallel(network: &Network) -> Result<SpTree, NotSeriesParallel> {
    let (o, d) = (network.origin(), network.destination());
    let mut arcs: Vec<Arc> = (0..network.edges().len())
        .map(|e| {
            let (from, to) = network.endpoints(e);
            Arc {
                from,
                to,
                tree: SpTree::Leaf(e),
            }
        })
        .collect();

    loop {
        let mut changed = false;

        // Parallel: merge arcs sharing both endpoints.
        let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, a) in arcs.iter().enumerate() {
            groups.entry((a.from, a.to)).or_default().push(i);
        }
        if groups.values().any(|g| g.len() > 1) {
            let mut slots: Vec<Option<Arc>> = arcs.into_iter().map(Some).collect();
            let mut merged = Vec::new();
            for ((from, to), members) in groups {
                let trees: Vec<SpTree> = members
                    .iter()
                    .map(|&i| slots[i].take().unwrap().tree)
                    .collect();
                let tree = if trees.len() == 1 {
                    trees.into_iter().next().unwrap()
                } else {
                    SpTree::parallel(trees)
                };
                merged.push(Arc { from, to, tree });
            }
            arcs = merged;
            changed = true;
        }

        // Series: contract an inner node with exactly one arc in and one out.
        let nodes = network.nodes().len();
        let mut indeg = vec![Vec::new(); nodes];
        let mut outdeg = vec![Vec::new(); nodes];
        for (i, a) in arcs.iter().enumerate() {
            outdeg[a.from].push(i);
            indeg[a.to].push(i);
        }
        let candidate = (0..nodes).find(|&v| {
            v != o
                && v != d
                && indeg[v].len() == 1
                && outdeg[v].len() == 1
                && arcs[indeg[v][0]].from != arcs[outdeg[v][0]].to
        });
        if let Some(v) = candidate {
            let (i, j) = (indeg[v][0], outdeg[v][0]);
            let (first, second) = if i < j { (i, j) } else { (j, i) };
            let b = arcs.remove(second);
            let a = arcs.remove(first);
            let (into, out_of) = if i < j { (a, b) } else { (b, a) };
            arcs.push(Arc {
                from: into.from,
                to: out_of.to,
                tree: SpTree::series(into.tree, out_of.tree),
            });
            changed = true;
        }

        if !changed {
            break;
        }
    }

    if arcs.len() == 1 && arcs[0].from == o && arcs[0].to == d {
        Ok(arcs.pop().unwrap().tree)
    } else {
        let mut witness: Vec<EdgeIdx> = arcs.iter().flat_map(|a| a.tree.edges()).collect();
        witness.sort_unstable();
        Err(NotSeriesParallel { witness })
    }
}

//! Centrality measures and community/cut detection.
//!
//! These power the topology-aware attack strategies and the
//! inverse-centrality defense.

mod centrality;
mod modularity;
mod walks;

use std::collections::HashMap;
use std::io::Write;

pub use centrality::{betweenness, centrality, eigenvector, CentralityKind, CentralityScores, Betweenness};
pub use modularity::{agglomerative_modularity, modularity, spectral_bisect, AgglomerativeVariant};
pub use walks::{
    flow_partition, map_equation_codelength, min_degree_kernel, mixing_partition, visit_frequencies,
    FlowParams, MixingParams, TransitionKernel,
};

use crate::graph::{EdgeIx, EdgeSet, NodeIx, RoadNetwork};
use crate::{Error, Result};

/// Assignment of every node to exactly one community.
///
/// Labels are contiguous from 0 and canonical: communities are numbered in
/// order of their first node, so equal partitions compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    num_communities: usize,
}

impl Partition {
    /// Canonicalizes arbitrary labels.
    pub fn from_labels<L: Copy + Eq + std::hash::Hash>(labels: &[L]) -> Self {
        let mut remap = HashMap::new();
        let labels: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(*l).or_insert(next)
            })
            .collect();
        Partition {
            num_communities: remap.len(),
            labels,
        }
    }

    pub fn single(n: usize) -> Self {
        Partition {
            labels: vec![0; n],
            num_communities: usize::from(n > 0),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            labels: (0..n).collect(),
            num_communities: n,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, n: NodeIx) -> usize {
        self.labels[n.0]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    pub fn members(&self, community: usize) -> Vec<NodeIx> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == community)
            .map(|(i, _)| NodeIx(i))
            .collect()
    }

    pub fn communities(&self) -> Vec<Vec<NodeIx>> {
        let mut out = vec![Vec::new(); self.num_communities];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(NodeIx(i));
        }
        out
    }

    pub(crate) fn check(&self, net: &RoadNetwork) -> Result<()> {
        if self.labels.len() != net.node_count() {
            return Err(Error::Domain(format!(
                "partition covers {} nodes, network has {}",
                self.labels.len(),
                net.node_count()
            )));
        }
        Ok(())
    }
}

/// Edges whose endpoints lie in different communities, in edge-id order.
pub fn partition_cutset(net: &RoadNetwork, part: &Partition) -> Result<EdgeSet> {
    part.check(net)?;
    let cut: Vec<EdgeIx> = net
        .edges_by_id()
        .iter()
        .copied()
        .filter(|&e| {
            let edge = net.edge(e);
            part.label(edge.u) != part.label(edge.v)
        })
        .collect();
    EdgeSet::new(net, cut)
}

/// Writes `node_id,community`.
pub fn write_partition(net: &RoadNetwork, part: &Partition, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "node_id,community")?;
    for n in net.node_indices() {
        writeln!(w, "{},{}", net.node(n).id, part.label(n))?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::graph::{EdgeRecord, NodeRecord, RoadNetwork};

    pub fn build(n: usize, edges: &[(usize, usize)]) -> RoadNetwork {
        build_weighted(n, &edges.iter().map(|&(u, v)| (u, v, 1.0)).collect::<Vec<_>>())
    }

    pub fn build_weighted(n: usize, edges: &[(usize, usize, f64)]) -> RoadNetwork {
        let (nodes, edges) = records(n, edges);
        RoadNetwork::from_records(nodes, edges).unwrap()
    }

    pub fn build_loose(n: usize, edges: &[(usize, usize)]) -> RoadNetwork {
        let w: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        let (nodes, edges) = records(n, &w);
        RoadNetwork::from_records_allow_disconnected(nodes, edges).unwrap()
    }

    fn records(n: usize, edges: &[(usize, usize, f64)]) -> (Vec<NodeRecord>, Vec<EdgeRecord>) {
        (
            (0..n)
                .map(|i| NodeRecord { id: format!("v{i:03}"), x: i as f64, y: 0.0 })
                .collect(),
            edges
                .iter()
                .enumerate()
                .map(|(i, &(u, v, t))| EdgeRecord {
                    id: format!("e{i:03}"),
                    u: format!("v{u:03}"),
                    v: format!("v{v:03}"),
                    length: t,
                    speed: 1.0,
                })
                .collect(),
        )
    }

    pub fn clique_edges(offset: usize, size: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..size {
            for b in a + 1..size {
                out.push((offset + a, offset + b));
            }
        }
        out
    }

    /// Two triangles {0,1,2} and {3,4,5} joined by the bridge 2–3.
    pub fn bridged_triangles() -> RoadNetwork {
        build(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
    }

    /// Two `size`-cliques joined by one bridge between their last/first nodes.
    pub fn bridged_cliques(size: usize) -> RoadNetwork {
        let mut e = clique_edges(0, size);
        e.extend(clique_edges(size, size));
        e.push((size - 1, size));
        build(2 * size, &e)
    }

    pub fn grid_edges(offset: usize, rows: usize, cols: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = offset + r * cols + c;
                if c + 1 < cols {
                    out.push((i, i + 1));
                }
                if r + 1 < rows {
                    out.push((i, i + cols));
                }
            }
        }
        out
    }

    /// Two 4×4 grids joined by two bridges; returns the bridge edge indices.
    pub fn twin_grids() -> (RoadNetwork, Vec<usize>) {
        let mut e = grid_edges(0, 4, 4);
        e.extend(grid_edges(16, 4, 4));
        let first = e.len();
        // rows 1 and 2: right side of block 0 to left side of block 1
        e.push((7, 20));
        e.push((11, 24));
        (build(32, &e), vec![first, first + 1])
    }

    /// Deterministic pseudo-random connected graph on `n` nodes.
    pub fn random_connected(n: usize, extra: usize, seed: u64) -> RoadNetwork {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = |m: usize| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as usize) % m
        };
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((next(v), v));
        }
        let mut tries = 0;
        while edges.len() < n - 1 + extra && tries < 1000 {
            tries += 1;
            let a = next(n);
            let b = next(n);
            if a == b || edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
                continue;
            }
            edges.push((a, b));
        }
        build(n, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn labels_are_canonical() {
        let p = Partition::from_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(p.num_communities(), 3);
        assert_eq!(Partition::from_labels(&["b", "a", "b"]), Partition::from_labels(&[1, 0, 1]));
    }

    #[test]
    fn cutset_cases() {
        let g = bridged_triangles();
        assert!(partition_cutset(&g, &Partition::single(6)).unwrap().is_empty());
        let cut = partition_cutset(&g, &Partition::from_labels(&[0, 0, 0, 1, 1, 1])).unwrap();
        assert_eq!(cut.ids(&g).collect::<Vec<_>>(), ["e006"]);
        let k4 = build(4, &clique_edges(0, 4));
        let cut = partition_cutset(&k4, &Partition::from_labels(&[0, 0, 1, 1])).unwrap();
        assert_eq!(cut.len(), 4);
    }

    #[test]
    fn cutset_size_is_edges_minus_internal() {
        for seed in 0..20 {
            let g = random_connected(9, 6, seed);
            let labels: Vec<usize> = (0..9).map(|i| (i * 7 + seed as usize) % 3).collect();
            let p = Partition::from_labels(&labels);
            let internal = g.edges().iter().filter(|e| p.label(e.u) == p.label(e.v)).count();
            assert_eq!(partition_cutset(&g, &p).unwrap().len(), g.edge_count() - internal);
        }
    }

    #[test]
    fn partition_size_mismatch() {
        let g = bridged_triangles();
        assert!(partition_cutset(&g, &Partition::single(3)).is_err());
    }

    #[test]
    fn export_format() {
        let g = bridged_triangles();
        let mut out = Vec::new();
        write_partition(&g, &Partition::from_labels(&[0, 0, 0, 1, 1, 1]), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("node_id,community\nv000,0\n"));
        assert_eq!(text.lines().count(), 7);
    }
}

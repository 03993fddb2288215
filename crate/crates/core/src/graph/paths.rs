use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{EdgeIx, NodeIx, RoadNetwork};
use crate::{Error, Result, Scalar};

/// A walk through the network: `nodes.len() == edges.len() + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<T> {
    pub nodes: Vec<NodeIx>,
    pub edges: Vec<EdgeIx>,
    pub weight: T,
}

impl<T: Scalar> Path<T> {
    pub fn trivial(at: NodeIx) -> Self {
        Path {
            nodes: vec![at],
            edges: Vec::new(),
            weight: T::zero(),
        }
    }

    pub fn source(&self) -> NodeIx {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeIx {
        *self.nodes.last().expect("path has at least one node")
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Total of `weights` over the path's edges.
    pub fn cost(&self, weights: &[T]) -> T {
        self.edges.iter().map(|e| weights[e.0]).sum()
    }
}

pub(crate) fn check_weights<T: Scalar>(net: &RoadNetwork, weights: &[T]) -> Result<()> {
    if weights.len() != net.edge_count() {
        return Err(Error::Domain(format!(
            "weight vector has {} entries for {} edges",
            weights.len(),
            net.edge_count()
        )));
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w >= T::zero()))
    {
        return Err(Error::Domain(format!(
            "weight of edge {} is {w}; weights must be finite and nonnegative",
            net.edge(EdgeIx(i)).id
        )));
    }
    Ok(())
}

/// Min-heap entry ordered by (distance, hops, node).
struct Frontier<T>(T, usize, usize);

impl<T: Scalar> PartialEq for Frontier<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Frontier<T> {}

impl<T: Scalar> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Frontier<T> {
    // reversed: BinaryHeap is a max-heap; weights are finite so
    // partial_cmp never fails
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then(other.1.cmp(&self.1))
            .then(other.2.cmp(&self.2))
    }
}

/// Dijkstra from `src` keyed on (distance, hop count).
///
/// Returns per-node distance and the fewest hops among minimum-distance
/// paths. Both are `None`/`usize::MAX` for unreachable nodes.
pub(crate) fn dijkstra<T: Scalar>(
    net: &RoadNetwork,
    src: NodeIx,
    weights: &[T],
) -> (Vec<Option<T>>, Vec<usize>) {
    let n = net.node_count();
    let mut dist: Vec<Option<T>> = vec![None; n];
    let mut hops = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src.0] = Some(T::zero());
    hops[src.0] = 0;
    heap.push(Frontier(T::zero(), 0, src.0));
    while let Some(Frontier(d, h, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, e) in net.neighbors(NodeIx(u)) {
            if done[v.0] {
                continue;
            }
            let nd = d + weights[e.0];
            let nh = h + 1;
            let better = match dist[v.0] {
                None => true,
                Some(old) => nd < old || (nd == old && nh < hops[v.0]),
            };
            if better {
                dist[v.0] = Some(nd);
                hops[v.0] = nh;
                heap.push(Frontier(nd, nh, v.0));
            }
        }
    }
    (dist, hops)
}

/// Minimum-weight distance from `src` to every node.
pub fn shortest_distances<T: Scalar>(net: &RoadNetwork, src: NodeIx, weights: &[T]) -> Result<Vec<T>> {
    check_weights(net, weights)?;
    let (dist, _) = dijkstra(net, src, weights);
    dist.into_iter()
        .enumerate()
        .map(|(i, d)| {
            d.ok_or_else(|| Error::Domain(format!("node {} unreachable", net.node(NodeIx(i)).id)))
        })
        .collect()
}

/// Minimum-weight path from `src` to `dst` under `weights`.
///
/// Among equal-weight paths the one with the fewest edges wins, then the
/// lexicographically smallest sequence of edge ids.
pub fn shortest_path<T: Scalar>(
    net: &RoadNetwork,
    src: NodeIx,
    dst: NodeIx,
    weights: &[T],
) -> Result<Path<T>> {
    check_weights(net, weights)?;
    if src.0 >= net.node_count() || dst.0 >= net.node_count() {
        return Err(Error::Domain("node index out of range".into()));
    }
    if src == dst {
        return Ok(Path::trivial(src));
    }
    // distances towards dst; the greedy walk below then always has the
    // Dijkstra predecessor available as a candidate, so it cannot stall.
    let (dist, hops) = dijkstra(net, dst, weights);
    let Some(total) = dist[src.0] else {
        return Err(Error::Domain(format!(
            "{} unreachable from {}",
            net.node(dst).id,
            net.node(src).id
        )));
    };
    let mut nodes = vec![src];
    let mut edges = Vec::with_capacity(hops[src.0]);
    let mut weight = T::zero();
    let mut at = src;
    while at != dst {
        let here = dist[at.0].expect("on a path to dst");
        let (next, e) = net
            .neighbors(at)
            .iter()
            .copied()
            .find(|&(v, e)| {
                hops[v.0] != usize::MAX
                    && hops[v.0] + 1 == hops[at.0]
                    && dist[v.0].is_some_and(|dv| T::ties(dv + weights[e.0], here))
            })
            .expect("predecessor edge always qualifies");
        weight = weight + weights[e.0];
        edges.push(e);
        nodes.push(next);
        at = next;
    }
    debug_assert!(T::ties(weight, total));
    Ok(Path { nodes, edges, weight })
}

use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::graph::{EdgeIx, NodeIx, RoadNetwork};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CentralityKind {
    Degree,
    Betweenness,
    Eigenvector,
}

impl fmt::Display for CentralityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CentralityKind::Degree => "degree",
            CentralityKind::Betweenness => "betweenness",
            CentralityKind::Eigenvector => "eigenvector",
        })
    }
}

impl FromStr for CentralityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(CentralityKind::Degree),
            "betweenness" => Ok(CentralityKind::Betweenness),
            "eigenvector" | "eigen" => Ok(CentralityKind::Eigenvector),
            other => Err(Error::Domain(format!("unknown centrality `{other}`"))),
        }
    }
}

/// Per-node and per-edge centrality scores, indexed by `NodeIx`/`EdgeIx`.
///
/// Edge scores: betweenness is true edge betweenness; degree and
/// eigenvector scores of an edge are the smaller of its endpoint scores.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralityScores<T> {
    pub kind: CentralityKind,
    pub node_scores: Vec<T>,
    pub edge_scores: Vec<T>,
    /// Leading adjacency eigenvalue, for the eigenvector kind only.
    pub eigenvalue: Option<T>,
}

pub fn centrality<T: Scalar>(net: &RoadNetwork, kind: CentralityKind) -> Result<CentralityScores<T>> {
    match kind {
        CentralityKind::Degree => {
            let node_scores: Vec<T> = net
                .node_indices()
                .map(|n| T::lit(net.degree(n) as f64))
                .collect();
            let edge_scores = min_over_endpoints(net, &node_scores);
            Ok(CentralityScores {
                kind,
                node_scores,
                edge_scores,
                eigenvalue: None,
            })
        }
        CentralityKind::Betweenness => {
            let b = betweenness(net, &net.travel_times_as::<T>())?;
            Ok(CentralityScores {
                kind,
                node_scores: b.nodes,
                edge_scores: b.edges,
                eigenvalue: None,
            })
        }
        CentralityKind::Eigenvector => {
            let (lambda, node_scores) = eigenvector::<T>(net)?;
            let edge_scores = min_over_endpoints(net, &node_scores);
            Ok(CentralityScores {
                kind,
                node_scores,
                edge_scores,
                eigenvalue: Some(lambda),
            })
        }
    }
}

fn min_over_endpoints<T: Scalar>(net: &RoadNetwork, node_scores: &[T]) -> Vec<T> {
    net.edges()
        .iter()
        .map(|e| node_scores[e.u.0].min(node_scores[e.v.0]))
        .collect()
}

/// Node and edge betweenness summed over unordered source/target pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Betweenness<T> {
    pub nodes: Vec<T>,
    pub edges: Vec<T>,
}

struct Settle<T>(T, usize);

impl<T: Scalar> PartialEq for Settle<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl<T: Scalar> Eq for Settle<T> {}
impl<T: Scalar> PartialOrd for Settle<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Settle<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(other.1.cmp(&self.1))
    }
}

const SOURCES_PER_TASK: usize = 16;

/// Exact weighted betweenness (Brandes), splitting evenly among tied
/// shortest paths. Sources are processed in fixed-size blocks that may run
/// in parallel; blocks are reduced in source order so the result does not
/// depend on the number of workers.
pub fn betweenness<T: Scalar>(net: &RoadNetwork, weights: &[T]) -> Result<Betweenness<T>> {
    crate::graph::check_weights(net, weights)?;
    if let Some(e) = net.edge_indices().find(|e| weights[e.0] <= T::zero()) {
        return Err(Error::Domain(format!(
            "betweenness needs positive weights; edge {} has {}",
            net.edge(e).id,
            weights[e.0]
        )));
    }
    let n = net.node_count();
    let m = net.edge_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<(Vec<T>, Vec<T>)> = sources
        .par_chunks(SOURCES_PER_TASK)
        .map(|block| {
            let mut nodes = vec![T::zero(); n];
            let mut edges = vec![T::zero(); m];
            for &s in block {
                accumulate_source(net, weights, NodeIx(s), &mut nodes, &mut edges);
            }
            (nodes, edges)
        })
        .collect();
    let half = T::lit(0.5);
    let mut nodes = vec![T::zero(); n];
    let mut edges = vec![T::zero(); m];
    for (pn, pe) in partials {
        for (a, b) in nodes.iter_mut().zip(pn) {
            *a = *a + b;
        }
        for (a, b) in edges.iter_mut().zip(pe) {
            *a = *a + b;
        }
    }
    // every unordered pair was counted from both ends
    nodes.iter_mut().for_each(|x| *x = *x * half);
    edges.iter_mut().for_each(|x| *x = *x * half);
    Ok(Betweenness { nodes, edges })
}

fn accumulate_source<T: Scalar>(
    net: &RoadNetwork,
    weights: &[T],
    s: NodeIx,
    node_acc: &mut [T],
    edge_acc: &mut [T],
) {
    let n = net.node_count();
    let mut dist: Vec<Option<T>> = vec![None; n];
    let mut sigma = vec![T::zero(); n];
    let mut preds: Vec<Vec<(usize, EdgeIx)>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    dist[s.0] = Some(T::zero());
    sigma[s.0] = T::one();
    heap.push(Settle(T::zero(), s.0));
    while let Some(Settle(d, u)) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        order.push(u);
        for &(v, e) in net.neighbors(NodeIx(u)) {
            if settled[v.0] {
                continue;
            }
            let nd = d + weights[e.0];
            match dist[v.0] {
                Some(old) if T::ties(nd, old) => {
                    sigma[v.0] = sigma[v.0] + sigma[u];
                    preds[v.0].push((u, e));
                }
                Some(old) if old < nd => {}
                _ => {
                    dist[v.0] = Some(nd);
                    sigma[v.0] = sigma[u];
                    preds[v.0].clear();
                    preds[v.0].push((u, e));
                    heap.push(Settle(nd, v.0));
                }
            }
        }
    }

    let mut delta = vec![T::zero(); n];
    for &w in order.iter().rev() {
        for &(v, e) in &preds[w] {
            let c = sigma[v] / sigma[w] * (T::one() + delta[w]);
            edge_acc[e.0] = edge_acc[e.0] + c;
            delta[v] = delta[v] + c;
        }
        if w != s.0 {
            node_acc[w] = node_acc[w] + delta[w];
        }
    }
}

const POWER_MAX_ITERATIONS: usize = 10_000;

/// Eigenvector centrality by power iteration, normalized to unit maximum.
///
/// Iterates on `A + I` (same eigenvectors, no oscillation on bipartite
/// graphs) from the all-ones vector until `‖A·c − λ·c‖∞ ≤ 1e-10` with `λ`
/// the Rayleigh quotient. Returns `(λ, c)`.
pub fn eigenvector<T: Scalar>(net: &RoadNetwork) -> Result<(T, Vec<T>)> {
    let n = net.node_count();
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
    let adj_mul = |x: &[T]| -> Vec<T> {
        net.node_indices()
            .map(|u| net.neighbors(u).iter().map(|&(v, _)| x[v.0]).sum())
            .collect()
    };
    let mut x = vec![T::one(); n];
    let mut residual = T::infinity();
    for _ in 0..POWER_MAX_ITERATIONS {
        let ax = adj_mul(&x);
        let num: T = x.iter().zip(&ax).map(|(a, b)| *a * *b).sum();
        let den: T = x.iter().map(|a| *a * *a).sum();
        let lambda = num / den;
        residual = x
            .iter()
            .zip(&ax)
            .map(|(xi, axi)| (*axi - lambda * *xi).abs())
            .fold(T::zero(), T::max);
        if residual <= tol {
            return Ok((lambda, x));
        }
        let mut y: Vec<T> = ax.iter().zip(&x).map(|(a, b)| *a + *b).collect();
        let top = y.iter().copied().fold(T::zero(), T::max);
        if top <= T::zero() {
            break;
        }
        y.iter_mut().for_each(|v| *v = *v / top);
        x = y;
    }
    Err(Error::Convergence {
        what: "eigenvector power iteration",
        residual: residual.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::fixtures::*;

    /// Independent oracle: enumerate every simple path between every pair,
    /// keep the minimum-weight ones and split credit evenly.
    fn brute_betweenness(net: &RoadNetwork, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = net.node_count();
        let mut nodes = vec![0.0; n];
        let mut edges = vec![0.0; net.edge_count()];
        for s in 0..n {
            for t in s + 1..n {
                let mut paths: Vec<(f64, Vec<usize>, Vec<usize>)> = Vec::new();
                let mut stack_nodes = vec![s];
                let mut stack_edges = Vec::new();
                fn dfs(
                    net: &RoadNetwork,
                    w: &[f64],
                    t: usize,
                    nodes: &mut Vec<usize>,
                    edges: &mut Vec<usize>,
                    out: &mut Vec<(f64, Vec<usize>, Vec<usize>)>,
                ) {
                    let at = *nodes.last().unwrap();
                    if at == t {
                        let cost = edges.iter().map(|&e| w[e]).sum();
                        out.push((cost, nodes.clone(), edges.clone()));
                        return;
                    }
                    for &(v, e) in net.neighbors(NodeIx(at)) {
                        if nodes.contains(&v.0) {
                            continue;
                        }
                        nodes.push(v.0);
                        edges.push(e.0);
                        dfs(net, w, t, nodes, edges, out);
                        nodes.pop();
                        edges.pop();
                    }
                }
                dfs(net, w, t, &mut stack_nodes, &mut stack_edges, &mut paths);
                let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let shortest: Vec<_> = paths.iter().filter(|p| f64::ties(p.0, best)).collect();
                let share = 1.0 / shortest.len() as f64;
                for (_, pn, pe) in shortest {
                    for &v in &pn[1..pn.len() - 1] {
                        nodes[v] += share;
                    }
                    for &e in pe {
                        edges[e] += share;
                    }
                }
            }
        }
        (nodes, edges)
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn star_degree() {
        let g = build(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let c = centrality::<f64>(&g, CentralityKind::Degree).unwrap();
        assert_eq!(c.node_scores, vec![5.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn cycle_eigenvector_uniform() {
        let g = build(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let c = centrality::<f64>(&g, CentralityKind::Eigenvector).unwrap();
        assert!(c.node_scores.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!((c.eigenvalue.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_residual_on_fixtures() {
        let mut graphs = vec![bridged_triangles(), bridged_cliques(5), twin_grids().0];
        graphs.extend((0..10).map(|s| random_connected(10, 5, s)));
        for g in graphs {
            let (lambda, c) = eigenvector::<f64>(&g).unwrap();
            let max = c.iter().copied().fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-12);
            assert!(c.iter().all(|&x| x >= 0.0));
            for u in g.node_indices() {
                let ac: f64 = g.neighbors(u).iter().map(|&(v, _)| c[v.0]).sum();
                assert!((ac - lambda * c[u.0]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn leaf_betweenness_is_zero() {
        // a small tree
        let g = build(6, &[(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]);
        let c = centrality::<f64>(&g, CentralityKind::Betweenness).unwrap();
        for n in g.node_indices() {
            if g.degree(n) == 1 {
                assert_eq!(c.node_scores[n.0], 0.0);
            }
        }
    }

    #[test]
    fn betweenness_matches_brute_force() {
        for seed in 0..25 {
            let g = random_connected(10, (seed % 7) as usize + 2, seed);
            let w = g.travel_times();
            let b = betweenness(&g, &w).unwrap();
            let (bn, be) = brute_betweenness(&g, &w);
            assert_close(&b.nodes, &bn);
            assert_close(&b.edges, &be);
        }
    }

    #[test]
    fn betweenness_with_weighted_ties() {
        // square with a diagonal-free tie plus a heavier chord
        let g = build_weighted(
            5,
            &[(0, 1, 1.0), (1, 2, 2.0), (0, 3, 2.0), (3, 2, 1.0), (2, 4, 1.5), (0, 4, 4.5)],
        );
        let w = g.travel_times();
        let b = betweenness(&g, &w).unwrap();
        let (bn, be) = brute_betweenness(&g, &w);
        assert_close(&b.nodes, &bn);
        assert_close(&b.edges, &be);
    }

    #[test]
    fn path_graph_edges_tie() {
        let g = build(3, &[(0, 1), (1, 2)]);
        let c = centrality::<f64>(&g, CentralityKind::Betweenness).unwrap();
        assert_eq!(c.edge_scores, vec![2.0, 2.0]);
        assert_eq!(c.node_scores, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn f32_instantiation() {
        let g = bridged_triangles();
        let c64 = centrality::<f64>(&g, CentralityKind::Betweenness).unwrap();
        let c32 = centrality::<f32>(&g, CentralityKind::Betweenness).unwrap();
        for (a, b) in c64.node_scores.iter().zip(&c32.node_scores) {
            assert!((a - f64::from(*b)).abs() < 1e-5);
        }
        let (l, _) = eigenvector::<f32>(&g).unwrap();
        assert!(l > 2.0);
    }
}

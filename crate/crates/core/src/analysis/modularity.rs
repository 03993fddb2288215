use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::Partition;
use crate::graph::RoadNetwork;
use crate::linalg::symmetric_eigen;
use crate::{Error, Result, Scalar};

/// Newman modularity `Q = (1/2m) Σ_ij [A_ij − d_i d_j / 2m] δ(c_i, c_j)`.
pub fn modularity<T: Scalar>(net: &RoadNetwork, part: &Partition) -> Result<T> {
    part.check(net)?;
    let m = net.edge_count();
    if m == 0 {
        return Ok(T::zero());
    }
    let k = part.num_communities();
    let mut internal = vec![0usize; k];
    let mut volume = vec![0usize; k];
    for e in net.edges() {
        if part.label(e.u) == part.label(e.v) {
            internal[part.label(e.u)] += 1;
        }
    }
    for n in net.node_indices() {
        volume[part.label(n)] += net.degree(n);
    }
    let m_t = T::lit(m as f64);
    let two_m = m_t + m_t;
    Ok((0..k)
        .map(|c| {
            let frac = T::lit(volume[c] as f64) / two_m;
            T::lit(internal[c] as f64) / m_t - frac * frac
        })
        .sum())
}

/// Splits by the sign pattern of the leading eigenvector of the
/// modularity matrix `B = A − d dᵀ / 2m`.
///
/// Returns a single community when the leading eigenvalue is not positive
/// or the eigenvector has one sign throughout (no cut worth making).
pub fn spectral_bisect<T: Scalar>(net: &RoadNetwork) -> Result<Partition> {
    let n = net.node_count();
    let m = net.edge_count();
    if n < 2 || m == 0 {
        return Ok(Partition::single(n));
    }
    let two_m = T::lit(2.0 * m as f64);
    let deg: Vec<T> = net.node_indices().map(|v| T::lit(net.degree(v) as f64)).collect();
    let mut b = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            b[i][j] = -deg[i] * deg[j] / two_m;
        }
    }
    for e in net.edges() {
        b[e.u.0][e.v.0] = b[e.u.0][e.v.0] + T::one();
        b[e.v.0][e.u.0] = b[e.v.0][e.u.0] + T::one();
    }
    let eig = symmetric_eigen(&b)?;
    let top = eig.values[n - 1];
    let scale = eig
        .values
        .iter()
        .fold(T::one(), |acc, v| acc.max(v.abs()));
    if top <= T::lit(1e-9).max(T::epsilon() * T::lit(256.0)) * scale {
        return Ok(Partition::single(n));
    }
    let vec = &eig.vectors[n - 1];
    let side: Vec<bool> = vec.iter().map(|&x| x > T::zero()).collect();
    if side.iter().all(|&s| s) || side.iter().all(|&s| !s) {
        return Ok(Partition::single(n));
    }
    Ok(Partition::from_labels(&side))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgglomerativeVariant {
    /// Pairwise community merging by largest modularity gain.
    Greedy,
    /// Local node moves followed by supernode coarsening.
    Hierarchical,
}

impl fmt::Display for AgglomerativeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgglomerativeVariant::Greedy => "greedy",
            AgglomerativeVariant::Hierarchical => "hierarchical",
        })
    }
}

impl FromStr for AgglomerativeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(AgglomerativeVariant::Greedy),
            "hierarchical" => Ok(AgglomerativeVariant::Hierarchical),
            other => Err(Error::Domain(format!("unknown modularity variant `{other}`"))),
        }
    }
}

pub fn agglomerative_modularity<T: Scalar>(
    net: &RoadNetwork,
    variant: AgglomerativeVariant,
) -> Result<Partition> {
    match variant {
        AgglomerativeVariant::Greedy => Ok(greedy::<T>(net)),
        AgglomerativeVariant::Hierarchical => louvain::<T>(net),
    }
}

/// CNM merging: repeatedly join the adjacent pair of communities with the
/// largest `ΔQ = 2 (e_ij − a_i a_j)` while that gain is positive.
fn greedy<T: Scalar>(net: &RoadNetwork) -> Partition {
    let n = net.node_count();
    let m = net.edge_count();
    if m == 0 {
        return Partition::singletons(n);
    }
    let two_m = T::lit(2.0 * m as f64);
    // e[i][j]: fraction of edge ends running between communities i and j
    let mut e: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
    for edge in net.edges() {
        let w = T::one() / two_m;
        *e[edge.u.0].entry(edge.v.0).or_insert(T::zero()) =
            e[edge.u.0].get(&edge.v.0).copied().unwrap_or(T::zero()) + w;
        *e[edge.v.0].entry(edge.u.0).or_insert(T::zero()) =
            e[edge.v.0].get(&edge.u.0).copied().unwrap_or(T::zero()) + w;
    }
    let mut a: Vec<T> = net
        .node_indices()
        .map(|v| T::lit(net.degree(v) as f64) / two_m)
        .collect();
    let mut alive = vec![true; n];
    let mut owner: Vec<usize> = (0..n).collect();
    let two = T::lit(2.0);

    loop {
        let mut best: Option<(T, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for (&j, &eij) in e[i].range(i + 1..) {
                let gain = two * (eij - a[i] * a[j]);
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, i, j));
                }
            }
        }
        let Some((gain, i, j)) = best else { break };
        if gain <= T::tie_tolerance() {
            break;
        }
        // fold j into i
        let row_j = std::mem::take(&mut e[j]);
        for (k, w) in row_j {
            if k == i {
                continue;
            }
            let cur = e[i].get(&k).copied().unwrap_or(T::zero());
            e[i].insert(k, cur + w);
            let back = e[k].remove(&j).unwrap_or(T::zero());
            let cur_k = e[k].get(&i).copied().unwrap_or(T::zero());
            e[k].insert(i, cur_k + back);
        }
        e[i].remove(&j);
        a[i] = a[i] + a[j];
        alive[j] = false;
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
    }
    Partition::from_labels(&owner)
}

/// Weighted graph with self-loops used by the Louvain levels.
struct Level<T> {
    adj: Vec<BTreeMap<usize, T>>,
    self_loops: Vec<T>,
}

impl<T: Scalar> Level<T> {
    fn strength(&self, i: usize) -> T {
        let s: T = self.adj[i].values().copied().sum();
        s + self.self_loops[i] + self.self_loops[i]
    }
}

const LOUVAIN_MIN_GAIN: f64 = 1e-9;
const LOUVAIN_MAX_PASSES: usize = 1_000;

/// Louvain: local moves until stable, coarsen to supernodes, repeat until
/// modularity of the induced partition improves by less than 1e-9.
fn louvain<T: Scalar>(net: &RoadNetwork) -> Result<Partition> {
    let n = net.node_count();
    let m = net.edge_count();
    if m == 0 {
        return Ok(Partition::singletons(n));
    }
    let mut level = Level {
        adj: vec![BTreeMap::new(); n],
        self_loops: vec![T::zero(); n],
    };
    for e in net.edges() {
        level.adj[e.u.0].insert(e.v.0, T::one());
        level.adj[e.v.0].insert(e.u.0, T::one());
    }
    let total = T::lit(m as f64);
    let two_total = total + total;
    // node -> current supernode
    let mut membership: Vec<usize> = (0..n).collect();
    let mut best_q = modularity::<T>(net, &Partition::from_labels(&membership))?;

    loop {
        let size = level.adj.len();
        let strength: Vec<T> = (0..size).map(|i| level.strength(i)).collect();
        let mut comm: Vec<usize> = (0..size).collect();
        let mut tot: Vec<T> = strength.clone();
        let mut moved_any = false;

        for _ in 0..LOUVAIN_MAX_PASSES {
            let mut moved = false;
            for i in 0..size {
                let old = comm[i];
                let ki = strength[i];
                let mut links: BTreeMap<usize, T> = BTreeMap::new();
                for (&j, &w) in &level.adj[i] {
                    let c = comm[j];
                    let cur = links.get(&c).copied().unwrap_or(T::zero());
                    links.insert(c, cur + w);
                }
                tot[old] = tot[old] - ki;
                let gain = |c: usize| -> T {
                    links.get(&c).copied().unwrap_or(T::zero()) - tot[c] * ki / two_total
                };
                let mut best_c = old;
                let mut best_gain = gain(old);
                for &c in links.keys() {
                    let g = gain(c);
                    if g > best_gain && !T::ties(g, best_gain) {
                        best_c = c;
                        best_gain = g;
                    }
                }
                tot[best_c] = tot[best_c] + ki;
                if best_c != old {
                    comm[i] = best_c;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        if !moved_any {
            break;
        }

        let relabel = Partition::from_labels(&comm);
        let candidate: Vec<usize> = membership.iter().map(|&s| relabel.labels()[s]).collect();
        let q = modularity::<T>(net, &Partition::from_labels(&candidate))?;
        if q - best_q < T::lit(LOUVAIN_MIN_GAIN) {
            if q > best_q {
                membership = candidate;
            }
            break;
        }
        best_q = q;
        membership = candidate;

        let k = relabel.num_communities();
        let mut next = Level {
            adj: vec![BTreeMap::new(); k],
            self_loops: vec![T::zero(); k],
        };
        for i in 0..size {
            let ci = relabel.labels()[i];
            next.self_loops[ci] = next.self_loops[ci] + level.self_loops[i];
            for (&j, &w) in &level.adj[i] {
                let cj = relabel.labels()[j];
                if ci == cj {
                    // each internal edge is seen from both ends
                    if i < j {
                        next.self_loops[ci] = next.self_loops[ci] + w;
                    }
                } else {
                    let cur = next.adj[ci].get(&cj).copied().unwrap_or(T::zero());
                    next.adj[ci].insert(cj, cur + w);
                }
            }
        }
        level = next;
        if k == 1 {
            break;
        }
    }
    Ok(Partition::from_labels(&membership))
}

//! Random-walk cut detection.
//!
//! `mixing_partition` measures how far short walks leak from their start
//! under the min-degree kernel and groups nodes with similar endpoint
//! distributions; `flow_partition` estimates visit rates from long walks
//! and greedily minimizes the two-level map-equation codelength.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::Partition;
use crate::graph::{conductance, NodeIx, RoadNetwork};
use crate::rng::{self, Rng};
use crate::{Error, Result, Scalar};

/// Row-stochastic transition matrix stored as sparse rows.
#[derive(Clone, Debug)]
pub struct TransitionKernel<T> {
    /// `rows[i]` lists `(j, P_ij)`; the self-transition is the last entry.
    pub rows: Vec<Vec<(NodeIx, T)>>,
}

impl<T: Scalar> TransitionKernel<T> {
    pub fn row_sum(&self, i: NodeIx) -> T {
        self.rows[i.0].iter().map(|&(_, p)| p).sum()
    }

    fn step(&self, at: NodeIx, rng: &mut Rng) -> NodeIx {
        let row = &self.rows[at.0];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(j, p) in row {
            acc += p.as_f64();
            if u < acc {
                return j;
            }
        }
        row.last().map(|&(j, _)| j).unwrap_or(at)
    }
}

/// `P_ij = min(1/d_i, 1/d_j)` for neighbors, residual mass on the self-loop.
pub fn min_degree_kernel<T: Scalar>(net: &RoadNetwork) -> TransitionKernel<T> {
    let rows = net
        .node_indices()
        .map(|i| {
            let di = T::lit(net.degree(i) as f64);
            let mut row: Vec<(NodeIx, T)> = net
                .neighbors(i)
                .iter()
                .map(|&(j, _)| {
                    let dj = T::lit(net.degree(j) as f64);
                    (j, (T::one() / di).min(T::one() / dj))
                })
                .collect();
            let out: T = row.iter().map(|&(_, p)| p).sum();
            row.push((i, (T::one() - out).max(T::zero())));
            row
        })
        .collect();
    TransitionKernel { rows }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MixingParams {
    pub walk_len: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl MixingParams {
    /// Walk length `⌈log2 |V|⌉ + 2`, 200 walks per node.
    pub fn for_network(net: &RoadNetwork, seed: u64) -> Self {
        let n = net.node_count().max(1);
        let log2 = usize::BITS - (n - 1).leading_zeros();
        MixingParams {
            walk_len: log2 as usize + 2,
            walks_per_node: 200,
            seed,
        }
    }
}

const MIN_COMMUNITIES: usize = 2;
const MAX_COMMUNITIES: usize = 8;

/// Short-walk mixing partition.
///
/// Every node launches `walks_per_node` walks of `walk_len` steps; its
/// feature is the empirical endpoint distribution. Average-linkage
/// clustering under total-variation distance yields candidates with 2..=8
/// communities and the candidate whose worst community conductance is
/// smallest wins.
pub fn mixing_partition(net: &RoadNetwork, params: MixingParams) -> Result<Partition> {
    if params.walk_len == 0 || params.walks_per_node == 0 {
        return Err(Error::Domain("mixing walks need walk_len ≥ 1 and walks_per_node ≥ 1".into()));
    }
    let n = net.node_count();
    if n < 2 {
        return Ok(Partition::single(n));
    }
    let kernel = min_degree_kernel::<f64>(net);
    let features: Vec<Vec<f64>> = net
        .node_indices()
        .map(|start| {
            let mut rng = rng::stream(params.seed, &[b"mixing", &start.0.to_le_bytes()]);
            let mut counts = vec![0.0; n];
            for _ in 0..params.walks_per_node {
                let mut at = start;
                for _ in 0..params.walk_len {
                    at = kernel.step(at, &mut rng);
                }
                counts[at.0] += 1.0;
            }
            let total = params.walks_per_node as f64;
            counts.iter_mut().for_each(|c| *c /= total);
            counts
        })
        .collect();

    let merges = average_linkage(&features);
    let mut best: Option<(f64, Partition)> = None;
    for k in MIN_COMMUNITIES..=MAX_COMMUNITIES.min(n) {
        let part = majority_smooth(net, cut_dendrogram(n, &merges, k));
        if part.num_communities() < 2 {
            continue;
        }
        let worst = part
            .communities()
            .iter()
            .map(|members| conductance::<f64>(net, members))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(b, _)| worst < *b) {
            best = Some((worst, part));
        }
    }
    Ok(best.map(|(_, p)| p).unwrap_or_else(|| Partition::single(n)))
}

const SMOOTHING_MAX_SWEEPS: usize = 100;

/// Moves nodes to the community holding a strict majority of their
/// neighbors. On a tie the move is taken only if it lowers the largest
/// community conductance.
fn majority_smooth(net: &RoadNetwork, part: Partition) -> Partition {
    let mut labels = part.labels().to_vec();
    let k = part.num_communities();
    let total_vol = 2 * net.edge_count();
    let mut vol = vec![0usize; k];
    let mut cut = vec![0usize; k];
    for v in net.node_indices() {
        vol[labels[v.0]] += net.degree(v);
        for &(u, _) in net.neighbors(v) {
            if labels[u.0] != labels[v.0] {
                cut[labels[v.0]] += 1;
            }
        }
    }
    let worst = |vol: &[usize], cut: &[usize]| -> f64 {
        (0..k)
            .filter(|&c| vol[c] > 0 && vol[c] < total_vol)
            .map(|c| cut[c] as f64 / vol[c].min(total_vol - vol[c]) as f64)
            .fold(0.0, f64::max)
    };
    for _ in 0..SMOOTHING_MAX_SWEEPS {
        let mut moved = false;
        for v in net.node_indices() {
            let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
            for &(u, _) in net.neighbors(v) {
                *tally.entry(labels[u.0]).or_insert(0) += 1;
            }
            let from = labels[v.0];
            let own = tally.get(&from).copied().unwrap_or(0);
            let Some((&to, &count)) = tally
                .iter()
                .filter(|&(&l, _)| l != from)
                .max_by_key(|&(l, c)| (*c, std::cmp::Reverse(*l)))
            else {
                continue;
            };
            if count < own {
                continue;
            }
            let d = net.degree(v);
            let mut new_vol = vol.clone();
            let mut new_cut = cut.clone();
            new_vol[from] -= d;
            new_vol[to] += d;
            new_cut[from] = new_cut[from] + 2 * own - d;
            new_cut[to] = new_cut[to] + d - 2 * count;
            let take = if count > own {
                2 * count > d
            } else {
                new_vol[from] > 0 && worst(&new_vol, &new_cut) < worst(&vol, &cut) - 1e-12
            };
            if take {
                labels[v.0] = to;
                vol = new_vol;
                cut = new_cut;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Partition::from_labels(&labels)
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

/// UPGMA merge sequence `(kept, absorbed)`; ties go to the smallest pair.
fn average_linkage(features: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = features.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = total_variation(&features[i], &features[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut size = vec![1usize; n];
    let mut alive = vec![true; n];
    // nearest[i] = (distance, j) over alive j > i
    let nearest_of = |i: usize, dist: &[Vec<f64>], alive: &[bool]| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for j in i + 1..dist.len() {
            if alive[j] && best.is_none_or(|(d, _)| dist[i][j] < d) {
                best = Some((dist[i][j], j));
            }
        }
        best
    };
    let mut nearest: Vec<Option<(f64, usize)>> = (0..n).map(|i| nearest_of(i, &dist, &alive)).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            if let Some((d, j)) = nearest[i] {
                if pick.is_none_or(|(pd, _, _)| d < pd) {
                    pick = Some((d, i, j));
                }
            }
        }
        let Some((_, a, b)) = pick else { break };
        // merge b into a (a < b)
        for k in 0..n {
            if alive[k] && k != a && k != b {
                let d = (dist[a][k] * size[a] as f64 + dist[b][k] * size[b] as f64)
                    / (size[a] + size[b]) as f64;
                dist[a][k] = d;
                dist[k][a] = d;
            }
        }
        size[a] += size[b];
        alive[b] = false;
        merges.push((a, b));
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let stale = match nearest[i] {
                Some((_, j)) => j == a || j == b || i == a,
                None => false,
            };
            // rows before `a` may now have `a` as a closer neighbor
            if stale || i < a {
                nearest[i] = nearest_of(i, &dist, &alive);
            }
        }
    }
    merges
}

fn cut_dendrogram(n: usize, merges: &[(usize, usize)], k: usize) -> Partition {
    let mut owner: Vec<usize> = (0..n).collect();
    let steps = n.saturating_sub(k).min(merges.len());
    for &(a, b) in &merges[..steps] {
        for o in owner.iter_mut() {
            if *o == b {
                *o = a;
            }
        }
    }
    Partition::from_labels(&owner)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowParams {
    pub num_walks: usize,
    pub walk_len: usize,
    /// Independent searches; the lowest codelength wins.
    pub trials: usize,
    pub seed: u64,
}

impl FlowParams {
    /// Eight walks of `100·|V|` steps each, ten search trials.
    pub fn for_network(net: &RoadNetwork, seed: u64) -> Self {
        FlowParams {
            num_walks: 8,
            walk_len: 100 * net.node_count().max(1),
            trials: 10,
            seed,
        }
    }
}

/// Visit frequencies of `num_walks` standard random walks of `walk_len`
/// steps started at uniformly drawn nodes. Sums to one.
pub fn visit_frequencies<T: Scalar>(net: &RoadNetwork, params: FlowParams) -> Result<Vec<T>> {
    if params.num_walks == 0 || params.walk_len == 0 {
        return Err(Error::Domain("flow walks need num_walks ≥ 1 and walk_len ≥ 1".into()));
    }
    let n = net.node_count();
    let mut visits = vec![0u64; n];
    for w in 0..params.num_walks {
        let mut rng = rng::stream(params.seed, &[b"flow", &w.to_le_bytes()]);
        let mut at = NodeIx(rng.gen_range(0..n));
        for _ in 0..params.walk_len {
            let nbrs = net.neighbors(at);
            if nbrs.is_empty() {
                break;
            }
            at = nbrs[rng.gen_range(0..nbrs.len())].0;
            visits[at.0] += 1;
        }
    }
    let total: u64 = visits.iter().sum();
    if total == 0 {
        return Ok(vec![T::lit(1.0 / n as f64); n]);
    }
    let total = T::lit(total as f64);
    Ok(visits.into_iter().map(|v| T::lit(v as f64) / total).collect())
}

fn plogp<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x * x.log2()
    } else {
        T::zero()
    }
}

/// Two-level map-equation codelength (bits) of `part` under node visit
/// rates `p`, with link flow `p_α / d_α` along every edge out of `α`.
pub fn map_equation_codelength<T: Scalar>(net: &RoadNetwork, p: &[T], part: &Partition) -> Result<T> {
    part.check(net)?;
    let k = part.num_communities();
    let mut exit = vec![T::zero(); k];
    let mut mass = vec![T::zero(); k];
    for a in net.node_indices() {
        let c = part.label(a);
        mass[c] = mass[c] + p[a.0];
        let d = net.degree(a);
        if d == 0 {
            continue;
        }
        let per_link = p[a.0] / T::lit(d as f64);
        for &(b, _) in net.neighbors(a) {
            if part.label(b) != c {
                exit[c] = exit[c] + per_link;
            }
        }
    }
    let q: T = exit.iter().copied().sum();
    let h_nodes: T = p.iter().map(|&x| plogp(x)).sum();
    let two = T::lit(2.0);
    let mut l = plogp(q) - h_nodes;
    for c in 0..k {
        l = l - two * plogp(exit[c]) + plogp(exit[c] + mass[c]);
    }
    Ok(l)
}

/// Long-walk flow partition.
///
/// Alternates greedy pairwise merging of adjacent modules (largest
/// codelength reduction first) with single-node moves between neighboring
/// modules, until neither changes the partition.
pub fn flow_partition(net: &RoadNetwork, params: FlowParams) -> Result<Partition> {
    if params.trials == 0 {
        return Err(Error::Domain("flow search needs trials ≥ 1".into()));
    }
    let n = net.node_count();
    let p = visit_frequencies::<f64>(net, params)?;
    if n < 2 {
        return Ok(Partition::single(n));
    }
    let mut best: Option<(f64, Partition)> = None;
    for trial in 0..params.trials {
        let mut order: Vec<NodeIx> = net.node_indices().collect();
        if trial > 0 {
            let mut rng = rng::stream(params.seed, &[b"flow-trial", &trial.to_le_bytes()]);
            order.shuffle(&mut rng);
        }
        let part = flow_search(net, &p, &order, trial > 0);
        let length = map_equation_codelength(net, &p, &part)?;
        if best.as_ref().is_none_or(|(b, _)| length < b - FLOW_MIN_GAIN) {
            best = Some((length, part));
        }
    }
    Ok(best.map(|(_, part)| part).unwrap_or_else(|| Partition::single(n)))
}

fn flow_search(net: &RoadNetwork, p: &[f64], order: &[NodeIx], shuffled: bool) -> Partition {
    let mut labels: Vec<usize> = (0..net.node_count()).collect();
    if shuffled {
        labels = refine_moves(net, p, &labels, order);
    }
    for _ in 0..FLOW_MAX_ROUNDS {
        let merged = greedy_merge(net, p, &labels);
        let refined = refine_moves(net, p, &merged, order);
        let before = Partition::from_labels(&labels);
        labels = refined;
        if Partition::from_labels(&labels) == before {
            break;
        }
    }
    Partition::from_labels(&labels)
}

const FLOW_MAX_ROUNDS: usize = 20;
const FLOW_MAX_SWEEPS: usize = 100;
const FLOW_MIN_GAIN: f64 = 1e-12;

/// Running totals from which the codelength is recomputed in O(1).
struct Codebook {
    exit: Vec<f64>,
    mass: Vec<f64>,
    q_total: f64,
    sum_exit_log: f64,
    sum_total_log: f64,
    h_nodes: f64,
}

impl Codebook {
    fn new(exit: Vec<f64>, mass: Vec<f64>, p: &[f64]) -> Self {
        let q_total = exit.iter().sum();
        let sum_exit_log = exit.iter().map(|&x| plogp(x)).sum();
        let sum_total_log = exit.iter().zip(&mass).map(|(&q, &m)| plogp(q + m)).sum();
        Codebook {
            exit,
            mass,
            q_total,
            sum_exit_log,
            sum_total_log,
            h_nodes: p.iter().map(|&x| plogp(x)).sum(),
        }
    }

    fn length(&self) -> f64 {
        self.length_with(&[])
    }

    /// Codelength after replacing the listed modules' (exit, mass).
    fn length_with(&self, changes: &[(usize, f64, f64)]) -> f64 {
        let mut q = self.q_total;
        let mut se = self.sum_exit_log;
        let mut st = self.sum_total_log;
        for &(c, exit, mass) in changes {
            q += exit - self.exit[c];
            se += plogp(exit) - plogp(self.exit[c]);
            st += plogp(exit + mass) - plogp(self.exit[c] + self.mass[c]);
        }
        plogp(q) - 2.0 * se - self.h_nodes + st
    }

    fn apply(&mut self, changes: &[(usize, f64, f64)]) {
        for &(c, exit, mass) in changes {
            self.q_total += exit - self.exit[c];
            self.sum_exit_log += plogp(exit) - plogp(self.exit[c]);
            self.sum_total_log += plogp(exit + mass) - plogp(self.exit[c] + self.mass[c]);
            self.exit[c] = exit;
            self.mass[c] = mass;
        }
    }
}

fn link_flow(net: &RoadNetwork, p: &[f64], a: NodeIx) -> f64 {
    match net.degree(a) {
        0 => 0.0,
        d => p[a.0] / d as f64,
    }
}

fn greedy_merge(net: &RoadNetwork, p: &[f64], labels: &[usize]) -> Vec<usize> {
    let n = net.node_count();
    // module ids are node indices of the labels' first members
    let part = Partition::from_labels(labels);
    let k = part.num_communities();
    let mut flow: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
    let mut exit = vec![0.0; k];
    let mut mass = vec![0.0; k];
    for a in net.node_indices() {
        let ca = part.label(a);
        mass[ca] += p[a.0];
        let f = link_flow(net, p, a);
        for &(b, _) in net.neighbors(a) {
            let cb = part.label(b);
            if cb != ca {
                *flow[ca].entry(cb).or_insert(0.0) += f;
                exit[ca] += f;
            }
        }
    }
    let mut book = Codebook::new(exit, mass, p);
    let mut current = book.length();
    let mut alive = vec![true; k];
    let mut owner: Vec<usize> = (0..k).collect();

    loop {
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for i in 0..k {
            if !alive[i] {
                continue;
            }
            for (&j, &f_ij) in flow[i].range(i + 1..) {
                let f_ji = flow[j].get(&i).copied().unwrap_or(0.0);
                let merged_exit = book.exit[i] + book.exit[j] - f_ij - f_ji;
                let l = book.length_with(&[
                    (i, merged_exit, book.mass[i] + book.mass[j]),
                    (j, 0.0, 0.0),
                ]);
                if best.is_none_or(|(b, _, _, _)| l < b) {
                    best = Some((l, i, j, merged_exit));
                }
            }
        }
        let Some((l, i, j, merged_exit)) = best else { break };
        if l >= current - FLOW_MIN_GAIN {
            break;
        }
        let merged_mass = book.mass[i] + book.mass[j];
        book.apply(&[(i, merged_exit, merged_mass), (j, 0.0, 0.0)]);
        current = l;

        let row_j = std::mem::take(&mut flow[j]);
        for (c, f) in row_j {
            if c != i {
                *flow[i].entry(c).or_insert(0.0) += f;
            }
        }
        flow[i].remove(&j);
        for c in 0..k {
            if c == i || !alive[c] {
                continue;
            }
            if let Some(f) = flow[c].remove(&j) {
                *flow[c].entry(i).or_insert(0.0) += f;
            }
        }
        alive[j] = false;
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
    }
    (0..n).map(|v| owner[part.labels()[v]]).collect()
}

fn refine_moves(net: &RoadNetwork, p: &[f64], labels: &[usize], order: &[NodeIx]) -> Vec<usize> {
    let part = Partition::from_labels(labels);
    let mut labels = part.labels().to_vec();
    let k = part.num_communities();
    let mut exit = vec![0.0; k];
    let mut mass = vec![0.0; k];
    for a in net.node_indices() {
        mass[labels[a.0]] += p[a.0];
        let f = link_flow(net, p, a);
        for &(b, _) in net.neighbors(a) {
            if labels[b.0] != labels[a.0] {
                exit[labels[a.0]] += f;
            }
        }
    }
    let mut book = Codebook::new(exit, mass, p);
    for _ in 0..FLOW_MAX_SWEEPS {
        let mut moved = false;
        for &a in order {
            let from = labels[a.0];
            let out_each = link_flow(net, p, a);
            let mut out_to: BTreeMap<usize, f64> = BTreeMap::new();
            let mut in_from: BTreeMap<usize, f64> = BTreeMap::new();
            for &(b, _) in net.neighbors(a) {
                *out_to.entry(labels[b.0]).or_insert(0.0) += out_each;
                *in_from.entry(labels[b.0]).or_insert(0.0) += link_flow(net, p, b);
            }
            let out_total = out_each * net.degree(a) as f64;
            let own_out = out_to.get(&from).copied().unwrap_or(0.0);
            let own_in = in_from.get(&from).copied().unwrap_or(0.0);
            let from_exit = book.exit[from] - (out_total - own_out) + own_in;
            let from_mass = book.mass[from] - p[a.0];
            let current = book.length();
            let mut best: Option<(f64, usize, f64)> = None;
            for (&to, &to_out) in &out_to {
                if to == from {
                    continue;
                }
                let to_in = in_from.get(&to).copied().unwrap_or(0.0);
                let to_exit = book.exit[to] - to_in + (out_total - to_out);
                let l = book.length_with(&[
                    (from, from_exit.max(0.0), from_mass.max(0.0)),
                    (to, to_exit.max(0.0), book.mass[to] + p[a.0]),
                ]);
                if best.is_none_or(|(b, _, _)| l < b) {
                    best = Some((l, to, to_exit));
                }
            }
            if let Some((l, to, to_exit)) = best {
                if l < current - FLOW_MIN_GAIN {
                    let to_mass = book.mass[to] + p[a.0];
                    book.apply(&[
                        (from, from_exit.max(0.0), from_mass.max(0.0)),
                        (to, to_exit.max(0.0), to_mass),
                    ]);
                    labels[a.0] = to;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
    labels
}

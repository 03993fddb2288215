//! Attack strategies: each one ranks every edge of the network and a plan
//! of budget `k` is the first `k` edges of that ranking.
//!
//! Rankings are nested by construction, so the plan for `k` is always a
//! subset of the plan for any larger budget built from the same ranking.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;

use crate::analysis::{
    agglomerative_modularity, betweenness, eigenvector, flow_partition, mixing_partition, partition_cutset,
    spectral_bisect, AgglomerativeVariant, FlowParams, MixingParams, Partition,
};
use crate::graph::io::{check_header, csv_error, csv_reader};
use crate::graph::{EdgeIx, EdgeSet, RoadNetwork};
use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackStrategy {
    Random,
    Degree,
    EigenC,
    Betweenness,
    Infomap,
    Botgrep,
    GreedyMod,
    HierarchicalMod,
    EigenMod,
}

impl AttackStrategy {
    pub const ALL: [AttackStrategy; 9] = [
        AttackStrategy::Random,
        AttackStrategy::Degree,
        AttackStrategy::EigenC,
        AttackStrategy::Betweenness,
        AttackStrategy::Infomap,
        AttackStrategy::Botgrep,
        AttackStrategy::GreedyMod,
        AttackStrategy::HierarchicalMod,
        AttackStrategy::EigenMod,
    ];

    pub const PARTITION_BASED: [AttackStrategy; 5] = [
        AttackStrategy::Infomap,
        AttackStrategy::Botgrep,
        AttackStrategy::GreedyMod,
        AttackStrategy::HierarchicalMod,
        AttackStrategy::EigenMod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackStrategy::Random => "random",
            AttackStrategy::Degree => "degree",
            AttackStrategy::EigenC => "eigen_c",
            AttackStrategy::Betweenness => "betweenness",
            AttackStrategy::Infomap => "infomap",
            AttackStrategy::Botgrep => "botgrep",
            AttackStrategy::GreedyMod => "greedy_mod",
            AttackStrategy::HierarchicalMod => "hierarchical_mod",
            AttackStrategy::EigenMod => "eigen_mod",
        }
    }

    /// Whether the ranking depends on the seed. Every other strategy is a
    /// function of topology alone, up to the walk sampling of `infomap`
    /// and `botgrep`.
    pub fn is_randomized(self) -> bool {
        self == AttackStrategy::Random
    }

    pub fn is_partition_based(self) -> bool {
        Self::PARTITION_BASED.contains(&self)
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown attack strategy `{s}`")))
    }
}

/// `k` attacked edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackPlan {
    pub strategy: AttackStrategy,
    pub edges: EdgeSet,
    pub seed: u64,
}

/// Full edge order produced by one strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRanking {
    pub strategy: AttackStrategy,
    pub seed: u64,
    order: Vec<EdgeIx>,
}

impl EdgeRanking {
    pub fn order(&self) -> &[EdgeIx] {
        &self.order
    }

    /// The first `k` edges.
    pub fn plan(&self, net: &RoadNetwork, k: usize) -> Result<AttackPlan> {
        check_budget(net, k)?;
        Ok(AttackPlan {
            strategy: self.strategy,
            edges: EdgeSet::new(net, self.order[..k].iter().copied())?,
            seed: self.seed,
        })
    }
}

fn check_budget(net: &RoadNetwork, k: usize) -> Result<()> {
    if k == 0 || k > net.edge_count() {
        return Err(Error::Domain(format!(
            "attack budget k = {k} outside 1..={}",
            net.edge_count()
        )));
    }
    Ok(())
}

pub fn select_attack_edges(net: &RoadNetwork, strategy: AttackStrategy, k: usize, seed: u64) -> Result<AttackPlan> {
    check_budget(net, k)?;
    rank_edges(net, strategy, seed)?.plan(net, k)
}

pub fn rank_edges(net: &RoadNetwork, strategy: AttackStrategy, seed: u64) -> Result<EdgeRanking> {
    let order = match strategy {
        AttackStrategy::Random => {
            let mut order = net.edges_by_id().to_vec();
            order.shuffle(&mut rng::stream(seed, &[b"attack-random"]));
            order
        }
        AttackStrategy::Degree => degree_order(net),
        AttackStrategy::EigenC => {
            let (_, c) = eigenvector::<f64>(net)?;
            let scores: Vec<f64> = net.edges().iter().map(|e| c[e.u.0].min(c[e.v.0])).collect();
            descending(net, &scores, net.edge_indices().collect())
        }
        AttackStrategy::Betweenness => {
            let b = edge_betweenness(net)?;
            descending(net, &b, net.edge_indices().collect())
        }
        _ => {
            let part = strategy_partition(net, strategy, seed)?;
            let cut = partition_cutset(net, &part)?;
            if cut.is_empty() {
                log::warn!("{strategy}: partition has no cut edges, ranking falls back to betweenness");
            }
            let b = edge_betweenness(net)?;
            let mask = cut.mask(net.edge_count());
            let (inside, outside): (Vec<EdgeIx>, Vec<EdgeIx>) = net.edge_indices().partition(|e| mask[e.0]);
            let mut order = descending(net, &b, inside);
            order.extend(descending(net, &b, outside));
            order
        }
    };
    Ok(EdgeRanking { strategy, seed, order })
}

/// The community structure a partition-based strategy cuts along.
pub fn strategy_partition(net: &RoadNetwork, strategy: AttackStrategy, seed: u64) -> Result<Partition> {
    match strategy {
        AttackStrategy::Infomap => flow_partition(net, FlowParams::for_network(net, seed)),
        AttackStrategy::Botgrep => mixing_partition(net, MixingParams::for_network(net, seed)),
        AttackStrategy::GreedyMod => agglomerative_modularity::<f64>(net, AgglomerativeVariant::Greedy),
        AttackStrategy::HierarchicalMod => agglomerative_modularity::<f64>(net, AgglomerativeVariant::Hierarchical),
        AttackStrategy::EigenMod => spectral_bisect::<f64>(net),
        other => Err(Error::Domain(format!("{other} is not a partition-based strategy"))),
    }
}

fn edge_betweenness(net: &RoadNetwork) -> Result<Vec<f64>> {
    Ok(betweenness(net, &net.travel_times())?.edges)
}

/// Scores are compared on a grid of 1e-9 of the largest score so that
/// values equal up to summation order tie and fall back to edge-id order.
fn descending(net: &RoadNetwork, scores: &[f64], mut edges: Vec<EdgeIx>) -> Vec<EdgeIx> {
    let scale = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let key = |e: EdgeIx| -> i64 {
        if scale == 0.0 {
            0
        } else {
            (scores[e.0] / scale * 1e9).round() as i64
        }
    };
    edges.sort_by_key(|&e| (std::cmp::Reverse(key(e)), net.edge_rank(e)));
    edges
}

/// Nodes by degree (descending, then node id); each node contributes its
/// not yet taken edges in edge-id order.
fn degree_order(net: &RoadNetwork) -> Vec<EdgeIx> {
    let mut nodes = net.nodes_by_id().to_vec();
    nodes.sort_by_key(|&n| std::cmp::Reverse(net.degree(n)));
    let mut taken = vec![false; net.edge_count()];
    let mut order = Vec::with_capacity(net.edge_count());
    for n in nodes {
        for &(_, e) in net.neighbors(n) {
            if !taken[e.0] {
                taken[e.0] = true;
                order.push(e);
            }
        }
    }
    order
}

/// Hands out plans for rounds, computing each topology ranking once.
///
/// Topology strategies rank with the fixed `analysis_seed`, so their plans
/// are the same in every round. `random` draws a fresh ranking per round;
/// with `nested` one ranking per round serves every budget (plans grow by
/// superset), otherwise each budget gets its own draw.
pub struct Planner<'a> {
    net: &'a RoadNetwork,
    analysis_seed: u64,
    nested: bool,
    cache: [OnceLock<std::result::Result<EdgeRanking, String>>; 9],
}

impl<'a> Planner<'a> {
    pub fn new(net: &'a RoadNetwork, analysis_seed: u64, nested: bool) -> Self {
        Planner {
            net,
            analysis_seed,
            nested,
            cache: Default::default(),
        }
    }

    pub fn ranking(&self, strategy: AttackStrategy) -> Result<&EdgeRanking> {
        let slot = AttackStrategy::ALL.iter().position(|&a| a == strategy).expect("listed");
        self.cache[slot]
            .get_or_init(|| rank_edges(self.net, strategy, self.analysis_seed).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Domain(format!("{strategy} ranking failed: {e}")))
    }

    pub fn plan(&self, strategy: AttackStrategy, k: usize, round: u64) -> Result<AttackPlan> {
        check_budget(self.net, k)?;
        if strategy.is_randomized() {
            let seed = if self.nested {
                rng::derive_seed(round, &[b"plan"])
            } else {
                rng::derive_seed(round, &[b"plan", &(k as u64).to_le_bytes()])
            };
            return rank_edges(self.net, strategy, seed)?.plan(self.net, k);
        }
        self.ranking(strategy)?.plan(self.net, k)
    }
}

pub fn write_plan(net: &RoadNetwork, edges: &EdgeSet, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "edge_id")?;
    for id in edges.ids(net) {
        writeln!(w, "{id}")?;
    }
    Ok(())
}

/// Reads a plan file (header `edge_id`) and resolves it against `net`.
pub fn read_plan(net: &RoadNetwork, r: impl Read, name: &str) -> Result<EdgeSet> {
    let mut rdr = csv_reader(r);
    check_header(&mut rdr, &["edge_id"], name)?;
    let mut ids = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, name))?;
        ids.push(rec[0].to_string());
    }
    EdgeSet::from_ids(net, &ids)
}

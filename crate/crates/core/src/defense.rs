//! Courier routing strategies.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::analysis::{betweenness, eigenvector};
use crate::graph::io::{check_header, csv_error, csv_reader, parse_field};
use crate::graph::{edge_disjoint_paths, shortest_path, EdgeIx, NodeIx, Path, RoadNetwork};
use crate::sim::JobCard;
use crate::{rng, Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DefenseStrategy {
    Shortest,
    RandomWalk,
    Disjoint,
    Inverse,
    Mixnet,
}

impl DefenseStrategy {
    pub const ALL: [DefenseStrategy; 5] = [
        DefenseStrategy::Shortest,
        DefenseStrategy::RandomWalk,
        DefenseStrategy::Disjoint,
        DefenseStrategy::Inverse,
        DefenseStrategy::Mixnet,
    ];

    /// The default experiment columns.
    pub const TRIO: [DefenseStrategy; 3] = [DefenseStrategy::Shortest, DefenseStrategy::Inverse, DefenseStrategy::Mixnet];

    pub fn name(self) -> &'static str {
        match self {
            DefenseStrategy::Shortest => "shortest",
            DefenseStrategy::RandomWalk => "random_walk",
            DefenseStrategy::Disjoint => "disjoint",
            DefenseStrategy::Inverse => "inverse",
            DefenseStrategy::Mixnet => "mixnet",
        }
    }
}

impl fmt::Display for DefenseStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DefenseStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown defense strategy `{s}`")))
    }
}

/// A courier's route, one leg per consecutive pair of waypoints. Leg
/// weights are travel times.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutePlan {
    pub strategy: DefenseStrategy,
    pub legs: Vec<Path<f64>>,
    pub seed: u64,
    /// Leg on which the courier gave up. That leg is the last one and
    /// holds the partial walk.
    pub failed_leg: Option<usize>,
}

impl RoutePlan {
    /// Rebuilds a plan from per-leg edge lists (as read from a route file).
    /// Missing trailing legs are empty. A leg that stops short of its
    /// waypoint is accepted only as the last nonempty leg, and marks the
    /// route as failed there.
    pub fn from_edges(
        net: &RoadNetwork,
        card: &JobCard,
        strategy: DefenseStrategy,
        mut legs: Vec<Vec<EdgeIx>>,
    ) -> Result<RoutePlan> {
        let way = card.waypoints(net)?;
        let n_legs = way.len() - 1;
        if legs.len() > n_legs {
            return Err(Error::Domain(format!(
                "courier {}: route has {} legs, card needs {n_legs}",
                card.courier_id,
                legs.len()
            )));
        }
        legs.resize(n_legs, Vec::new());
        let mut out = Vec::with_capacity(n_legs);
        for (i, edges) in legs.iter().enumerate() {
            let leg = trace(net, way[i], edges)
                .map_err(|m| Error::Domain(format!("courier {} leg {i}: {m}", card.courier_id)))?;
            if leg.target() != way[i + 1] {
                if legs[i + 1..].iter().all(Vec::is_empty) {
                    out.push(leg);
                    return Ok(RoutePlan { strategy, legs: out, seed: 0, failed_leg: Some(i) });
                }
                return Err(Error::Domain(format!(
                    "courier {} leg {i} ends at {} instead of {}",
                    card.courier_id,
                    net.node(leg.target()).id,
                    net.node(way[i + 1]).id
                )));
            }
            out.push(leg);
        }
        Ok(RoutePlan { strategy, legs: out, seed: 0, failed_leg: None })
    }

    /// Checks that the legs chain through the card's waypoints.
    pub fn check_against(&self, net: &RoadNetwork, card: &JobCard) -> Result<()> {
        let way = card.waypoints(net)?;
        let expected = match self.failed_leg {
            Some(f) => f + 1,
            None => way.len() - 1,
        };
        let mismatch = |m: String| Error::Domain(format!("route does not fit card {}: {m}", card.courier_id));
        if self.legs.len() != expected || expected > way.len() - 1 {
            return Err(mismatch(format!("{} legs, expected {expected}", self.legs.len())));
        }
        for (i, leg) in self.legs.iter().enumerate() {
            let edges_ok = leg.nodes.len() == leg.edges.len() + 1
                && leg.edges.iter().zip(leg.nodes.windows(2)).all(|(&e, w)| {
                    e.0 < net.edge_count() && {
                        let edge = net.edge(e);
                        (edge.u == w[0] && edge.v == w[1]) || (edge.u == w[1] && edge.v == w[0])
                    }
                });
            if !edges_ok {
                return Err(mismatch(format!("leg {i} is not a walk")));
            }
            if leg.source() != way[i] || (self.failed_leg != Some(i) && leg.target() != way[i + 1]) {
                return Err(mismatch(format!("leg {i} has the wrong endpoints")));
            }
        }
        Ok(())
    }
}

fn trace(net: &RoadNetwork, start: NodeIx, edges: &[EdgeIx]) -> std::result::Result<Path<f64>, String> {
    let mut nodes = vec![start];
    let mut at = start;
    let mut weight = 0.0;
    for &e in edges {
        let edge = net.edge(e);
        if !edge.touches(at) {
            return Err(format!("edge {} does not leave {}", edge.id, net.node(at).id));
        }
        at = edge.other(at);
        weight += edge.travel_time();
        nodes.push(at);
    }
    Ok(Path { nodes, edges: edges.to_vec(), weight })
}

/// `C^D·C^B·C^E / (C^D + C^B + C^E)`, or zero when the sum vanishes.
pub fn inverse_score<T: Scalar>(degree: T, between: T, eigen: T) -> T {
    let sum = degree + between + eigen;
    if sum == T::zero() {
        T::zero()
    } else {
        degree * between * eigen / sum
    }
}

/// Per-edge inverse-centrality weights, indexed by `EdgeIx`.
///
/// For an edge oriented towards node `j` the three measures are `D_j/|E|`,
/// the node betweenness of `j` and the eigenvector centrality of `j`
/// (largest entry 1); an undirected edge takes the smaller of its two
/// orientations.
pub fn inverse_centrality_scores<T: Scalar>(net: &RoadNetwork) -> Result<Vec<T>> {
    let b = betweenness::<T>(net, &net.travel_times_as::<T>())?;
    let (_, c) = eigenvector::<T>(net)?;
    let m = T::lit(net.edge_count() as f64);
    let node: Vec<T> = net
        .node_indices()
        .map(|j| inverse_score(T::lit(net.degree(j) as f64) / m, b.nodes[j.0], c[j.0]))
        .collect();
    Ok(net.edges().iter().map(|e| node[e.u.0].min(node[e.v.0])).collect())
}

/// Routes cards over one network, caching what the strategies share.
pub struct Router<'a> {
    net: &'a RoadNetwork,
    travel: Vec<f64>,
    inverse: OnceLock<std::result::Result<Vec<f64>, String>>,
}

impl<'a> Router<'a> {
    pub fn new(net: &'a RoadNetwork) -> Self {
        Router {
            net,
            travel: net.travel_times(),
            inverse: OnceLock::new(),
        }
    }

    pub fn net(&self) -> &'a RoadNetwork {
        self.net
    }

    pub fn inverse_scores(&self) -> Result<&[f64]> {
        self.inverse
            .get_or_init(|| inverse_centrality_scores::<f64>(self.net).map_err(|e| e.to_string()))
            .as_deref()
            .map_err(|e| Error::Domain(format!("inverse centrality unavailable: {e}")))
    }

    /// Routes `card`. `seed` identifies the round; randomized strategies
    /// draw from a stream keyed by the round and the courier id.
    pub fn plan_route(&self, card: &JobCard, strategy: DefenseStrategy, seed: u64) -> Result<RoutePlan> {
        let net = self.net;
        let way = card.waypoints(net)?;
        let mut rng = rng::stream(seed, &[strategy.name().as_bytes(), card.courier_id.as_bytes()]);
        let weights: Option<Vec<f64>> = match strategy {
            DefenseStrategy::Shortest => None,
            DefenseStrategy::Inverse => Some(self.inverse_scores()?.to_vec()),
            DefenseStrategy::Mixnet => Some((0..net.edge_count()).map(|_| rng.gen::<f64>()).collect()),
            DefenseStrategy::RandomWalk | DefenseStrategy::Disjoint => None,
        };
        let mut legs = Vec::with_capacity(way.len() - 1);
        for (i, pair) in way.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            let leg = match strategy {
                _ if a == b => Path::trivial(a),
                DefenseStrategy::Shortest => shortest_path(net, a, b, &self.travel)?,
                DefenseStrategy::Inverse | DefenseStrategy::Mixnet => {
                    let mut p = shortest_path(net, a, b, weights.as_deref().expect("weights drawn"))?;
                    p.weight = p.cost(&self.travel);
                    p
                }
                DefenseStrategy::Disjoint => {
                    let options = edge_disjoint_paths(net, a, b)?;
                    options.choose(&mut rng).cloned().expect("connected network has a path")
                }
                DefenseStrategy::RandomWalk => {
                    let (walk, arrived) = random_walk(net, a, b, &mut rng);
                    if !arrived {
                        legs.push(walk);
                        return Ok(RoutePlan { strategy, legs, seed, failed_leg: Some(i) });
                    }
                    walk
                }
            };
            legs.push(leg);
        }
        Ok(RoutePlan { strategy, legs, seed, failed_leg: None })
    }
}

pub fn plan_route(net: &RoadNetwork, card: &JobCard, strategy: DefenseStrategy, seed: u64) -> Result<RoutePlan> {
    Router::new(net).plan_route(card, strategy, seed)
}

/// Steps allowed per random-walk leg, per node of the network.
pub const RANDOM_WALK_STEPS_PER_NODE: usize = 50;

fn random_walk(net: &RoadNetwork, from: NodeIx, to: NodeIx, rng: &mut rng::Rng) -> (Path<f64>, bool) {
    let cap = RANDOM_WALK_STEPS_PER_NODE * net.node_count();
    let mut path = Path::trivial(from);
    let mut at = from;
    for _ in 0..cap {
        if at == to {
            break;
        }
        let &(next, e) = net.neighbors(at).choose(rng).expect("connected network");
        path.edges.push(e);
        path.nodes.push(next);
        path.weight += net.edge(e).travel_time();
        at = next;
    }
    (path, at == to)
}

pub const ROUTES_HEADER: [&str; 4] = ["courier_id", "leg_index", "edge_id", "order"];

pub fn write_routes<'r>(
    net: &RoadNetwork,
    routes: impl IntoIterator<Item = (&'r str, &'r RoutePlan)>,
    mut w: impl Write,
) -> std::io::Result<()> {
    writeln!(w, "{}", ROUTES_HEADER.join(","))?;
    for (courier, plan) in routes {
        for (i, leg) in plan.legs.iter().enumerate() {
            for (order, &e) in leg.edges.iter().enumerate() {
                writeln!(w, "{courier},{i},{},{order}", net.edge(e).id)?;
            }
        }
    }
    Ok(())
}

/// Per-courier legs as edge lists, ordered by leg index and `order`.
pub fn read_routes(net: &RoadNetwork, r: impl Read, name: &str) -> Result<BTreeMap<String, Vec<Vec<EdgeIx>>>> {
    let mut rdr = csv_reader(r);
    check_header(&mut rdr, &ROUTES_HEADER, name)?;
    let mut raw: BTreeMap<String, BTreeMap<usize, BTreeMap<usize, EdgeIx>>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, name))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let leg: usize = parse_field(&rec[1], "leg_index", name, line)?;
        let order: usize = parse_field(&rec[3], "order", name, line)?;
        let edge = net.edge_ix(&rec[2]).ok_or_else(|| Error::Parse {
            file: name.into(),
            line,
            message: format!("unknown edge `{}`", &rec[2]),
        })?;
        let slot = raw.entry(rec[0].to_string()).or_default().entry(leg).or_default();
        if slot.insert(order, edge).is_some() {
            return Err(Error::Parse {
                file: name.into(),
                line,
                message: format!("courier {} leg {leg} repeats order {order}", &rec[0]),
            });
        }
    }
    Ok(raw
        .into_iter()
        .map(|(courier, legs)| {
            let len = legs.keys().next_back().map_or(0, |&l| l + 1);
            let mut out = vec![Vec::new(); len];
            for (i, edges) in legs {
                out[i] = edges.into_values().collect();
            }
            (courier, out)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::fixtures::*;
    use crate::graph::{EdgeRecord, NodeRecord};
    use crate::sim::Stop;
    use approx::assert_relative_eq;

    fn card(courier: &str, stops: &[usize]) -> JobCard {
        JobCard {
            courier_id: courier.into(),
            warehouse: "v000".into(),
            stops: stops
                .iter()
                .map(|&s| Stop {
                    node_id: format!("v{s:03}"),
                    window_start: 0.0,
                    window_end: 1e6,
                })
                .collect(),
            day_start: 0.0,
        }
    }

    fn square() -> RoadNetwork {
        build(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])
    }

    #[test]
    fn names_round_trip() {
        for d in DefenseStrategy::ALL {
            assert_eq!(d.name().parse::<DefenseStrategy>().unwrap(), d);
        }
        assert!("teleport".parse::<DefenseStrategy>().is_err());
    }

    #[test]
    fn inverse_formula() {
        // equal measures c give c³ / 3c = c² / 3
        for c in [0.3, 1.0, 7.5] {
            assert_relative_eq!(inverse_score(c, c, c), c * c / 3.0, max_relative = 1e-15);
        }
        assert_relative_eq!(inverse_score(1.0, 2.0, 3.0), 1.0);
        assert_eq!(inverse_score(0.0, 0.5, 0.7), 0.0);
        assert_eq!(inverse_score(0.0f32, 0.0, 0.0), 0.0);
    }

    #[test]
    fn inverse_scores_on_cycle_are_equal_and_stable() {
        let g = build(6, &(0..6).map(|i| (i, (i + 1) % 6)).collect::<Vec<_>>());
        let s = inverse_centrality_scores::<f64>(&g).unwrap();
        for x in &s {
            assert_relative_eq!(*x, s[0], max_relative = 1e-12);
        }
        assert!(s[0] > 0.0);
        let again = inverse_centrality_scores::<f64>(&g).unwrap();
        assert_eq!(s.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), again.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn single_edge_every_strategy() {
        let g = build(2, &[(0, 1)]);
        let c = card("c", &[1]);
        for d in DefenseStrategy::ALL {
            let plan = plan_route(&g, &c, d, 3).unwrap();
            assert_eq!(plan.failed_leg, None, "{d}");
            for leg in &plan.legs {
                assert_eq!(leg.edges, [EdgeIx(0)], "{d}");
            }
        }
    }

    #[test]
    fn every_plan_fits_its_card() {
        let g = random_connected(15, 12, 2);
        let c = card("c", &[4, 9, 9, 0, 13]);
        for d in DefenseStrategy::ALL {
            for seed in 0..5 {
                let plan = plan_route(&g, &c, d, seed).unwrap();
                plan.check_against(&g, &c).unwrap();
                assert_eq!(plan.legs.len(), 6);
            }
        }
    }

    #[test]
    fn bridge_is_unavoidable_for_inverse() {
        let g = bridged_cliques(4);
        let bridge = g.edge_indices().last().unwrap();
        let plan = plan_route(&g, &card("c", &[6]), DefenseStrategy::Inverse, 0).unwrap();
        assert!(plan.legs[0].edges.contains(&bridge));
    }

    #[test]
    fn mixnet_splits_parallel_routes_evenly() {
        let g = square();
        let c = card("c", &[2]);
        let n = 10_000;
        let via_one = (0..n)
            .filter(|&s| plan_route(&g, &c, DefenseStrategy::Mixnet, s).unwrap().legs[0].nodes[1] == NodeIx(1))
            .count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((via_one - n as f64 / 2.0).abs() <= 3.0 * sd, "{via_one}");
    }

    #[test]
    fn mixnet_couriers_draw_independently() {
        let g = square();
        let router = Router::new(&g);
        let n = 1_000;
        let agree = (0..n)
            .filter(|&s| {
                let a = router.plan_route(&card("a", &[2]), DefenseStrategy::Mixnet, s).unwrap();
                let b = router.plan_route(&card("b", &[2]), DefenseStrategy::Mixnet, s).unwrap();
                a.legs[0] == b.legs[0]
            })
            .count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((agree - n as f64 / 2.0).abs() <= 3.0 * sd, "{agree}");
    }

    #[test]
    fn mixnet_never_beats_shortest_travel_time() {
        let g = build(16, &grid_edges(0, 4, 4));
        let c = card("c", &[15, 3, 12]);
        let best = plan_route(&g, &c, DefenseStrategy::Shortest, 0).unwrap();
        for seed in 0..50 {
            let mix = plan_route(&g, &c, DefenseStrategy::Mixnet, seed).unwrap();
            for (s, m) in best.legs.iter().zip(&mix.legs) {
                assert!(s.weight <= m.weight + 1e-12);
            }
        }
    }

    #[test]
    fn shortest_ignores_uniform_scaling() {
        let base = random_connected(12, 10, 8);
        let (nodes, edges) = base.to_records();
        let scaled = RoadNetwork::from_records(
            nodes,
            edges.into_iter().map(|e| EdgeRecord { length: e.length * 3.7, ..e }).collect(),
        )
        .unwrap();
        let c = card("c", &[5, 11, 2]);
        let a = plan_route(&base, &c, DefenseStrategy::Shortest, 0).unwrap();
        let b = plan_route(&scaled, &c, DefenseStrategy::Shortest, 0).unwrap();
        for (x, y) in a.legs.iter().zip(&b.legs) {
            assert_eq!(x.edges, y.edges);
        }
    }

    #[test]
    fn disjoint_uses_both_sides_of_a_cycle() {
        let g = square();
        let c = card("c", &[2]);
        let firsts: std::collections::BTreeSet<NodeIx> = (0..40)
            .map(|s| plan_route(&g, &c, DefenseStrategy::Disjoint, s).unwrap().legs[0].nodes[1])
            .collect();
        assert_eq!(firsts.into_iter().collect::<Vec<_>>(), [NodeIx(1), NodeIx(3)]);
    }

    #[test]
    fn long_random_walk_gives_up() {
        let n = 400;
        let g = RoadNetwork::from_records(
            (0..n).map(|i| NodeRecord { id: format!("v{i:03}"), x: 0.0, y: 0.0 }).collect(),
            (1..n)
                .map(|i| EdgeRecord {
                    id: format!("e{i:03}"),
                    u: format!("v{:03}", i - 1),
                    v: format!("v{i:03}"),
                    length: 1.0,
                    speed: 1.0,
                })
                .collect(),
        )
        .unwrap();
        let c = card("c", &[n - 1]);
        let plan = plan_route(&g, &c, DefenseStrategy::RandomWalk, 0).unwrap();
        assert_eq!(plan.failed_leg, Some(0));
        assert_eq!(plan.legs[0].edges.len(), RANDOM_WALK_STEPS_PER_NODE * n);
        plan.check_against(&g, &c).unwrap();
    }

    #[test]
    fn route_file_round_trip() {
        let g = random_connected(12, 10, 5);
        let c = card("c7", &[3, 3, 8]);
        let plan = plan_route(&g, &c, DefenseStrategy::Mixnet, 4).unwrap();
        let mut buf = Vec::new();
        write_routes(&g, [("c7", &plan)], &mut buf).unwrap();
        let legs = read_routes(&g, buf.as_slice(), "routes.csv").unwrap().remove("c7").unwrap();
        let back = RoutePlan::from_edges(&g, &c, DefenseStrategy::Mixnet, legs).unwrap();
        assert_eq!(back.legs, plan.legs);
        let bad = RoutePlan::from_edges(&g, &c, DefenseStrategy::Mixnet, vec![vec![], vec![EdgeIx(0)]]);
        assert!(bad.is_err());
    }
}

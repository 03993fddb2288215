use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::graph::{EdgeRecord, NodeRecord, RoadNetwork};
use crate::{rng, Error, Result};

/// Speed assigned to every generated road, m/s.
pub const CITY_SPEED: f64 = 10.0;

/// Attempts a geometric city gets before giving up on connectivity.
pub const GEOMETRIC_RETRIES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Grid,
    Complete,
}

/// Parameters for [`generate_city`].
#[derive(Clone, Debug, PartialEq)]
pub enum CitySpec {
    /// rows×cols lattice, every edge `edge_time` seconds.
    Grid { rows: usize, cols: usize, edge_time: f64 },
    /// `n` points uniform in a `side`×`side` square (meters), joined when
    /// closer than `radius`.
    Geometric { n: usize, radius: f64, side: f64 },
    TwoCluster(TwoClusterSpec),
}

/// Two blocks of `a` and `b` nodes joined by `bridges` direct edges.
///
/// Grid blocks need square sizes. Each bypass is a direct road of
/// `bypass_time` seconds between two non-bridge boundary nodes; make it
/// slow and it only carries detours.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoClusterSpec {
    pub a: usize,
    pub b: usize,
    pub bridges: usize,
    pub block: BlockKind,
    pub bypasses: usize,
    pub edge_time: f64,
    pub bypass_time: f64,
}

impl TwoClusterSpec {
    /// Grid blocks, no bypasses, 60 s edges (300 s bypasses once enabled).
    pub fn new(a: usize, b: usize, bridges: usize) -> Self {
        TwoClusterSpec {
            a,
            b,
            bridges,
            block: BlockKind::Grid,
            bypasses: 0,
            edge_time: 60.0,
            bypass_time: 300.0,
        }
    }
}

impl CitySpec {
    pub fn grid(rows: usize, cols: usize) -> Self {
        CitySpec::Grid { rows, cols, edge_time: 60.0 }
    }

    pub fn two_cluster(a: usize, b: usize, bridges: usize) -> Self {
        CitySpec::TwoCluster(TwoClusterSpec::new(a, b, bridges))
    }
}

pub(super) fn split_pairs(s: &str) -> Result<(String, Vec<(String, String)>)> {
    let mut words = s.split_whitespace();
    let kind = words
        .next()
        .ok_or_else(|| Error::Validation("empty city spec".into()))?
        .to_string();
    let pairs = words
        .map(|w| {
            w.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Validation(format!("expected key=value, got `{w}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((kind, pairs))
}

pub(super) fn take<T: FromStr>(pairs: &mut Vec<(String, String)>, key: &str, default: Option<T>) -> Result<T> {
    match pairs.iter().position(|(k, _)| k == key) {
        Some(i) => {
            let (_, v) = pairs.remove(i);
            v.parse()
                .map_err(|_| Error::Validation(format!("bad value `{v}` for {key}")))
        }
        None => default.ok_or_else(|| Error::Validation(format!("missing {key}="))),
    }
}

/// Parses `grid rows=3 cols=3 edge_time=60`,
/// `geometric n=60 radius=250 side=1000` or
/// `two_cluster a=16 b=16 bridges=2 block=grid bypasses=0 edge_time=60 bypass_time=300`.
impl FromStr for CitySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, mut p) = split_pairs(s)?;
        let spec = match kind.as_str() {
            "grid" => CitySpec::Grid {
                rows: take(&mut p, "rows", None)?,
                cols: take(&mut p, "cols", None)?,
                edge_time: take(&mut p, "edge_time", Some(60.0))?,
            },
            "geometric" => CitySpec::Geometric {
                n: take(&mut p, "n", None)?,
                radius: take(&mut p, "radius", None)?,
                side: take(&mut p, "side", Some(1000.0))?,
            },
            "two_cluster" => {
                let block: String = take(&mut p, "block", Some("grid".to_string()))?;
                let edge_time = take(&mut p, "edge_time", Some(60.0))?;
                CitySpec::TwoCluster(TwoClusterSpec {
                    a: take(&mut p, "a", None)?,
                    b: take(&mut p, "b", None)?,
                    bridges: take(&mut p, "bridges", None)?,
                    block: match block.as_str() {
                        "grid" => BlockKind::Grid,
                        "complete" => BlockKind::Complete,
                        other => return Err(Error::Validation(format!("unknown block kind `{other}`"))),
                    },
                    bypasses: take(&mut p, "bypasses", Some(0))?,
                    edge_time,
                    bypass_time: take(&mut p, "bypass_time", Some(5.0 * edge_time))?,
                })
            }
            other => return Err(Error::Validation(format!("unknown city kind `{other}`"))),
        };
        if let Some((k, _)) = p.first() {
            return Err(Error::Validation(format!("unknown key `{k}` for {kind}")));
        }
        Ok(spec)
    }
}

impl fmt::Display for CitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CitySpec::Grid { rows, cols, edge_time } => write!(f, "grid rows={rows} cols={cols} edge_time={edge_time}"),
            CitySpec::Geometric { n, radius, side } => write!(f, "geometric n={n} radius={radius} side={side}"),
            CitySpec::TwoCluster(TwoClusterSpec { a, b, bridges, block, bypasses, edge_time, bypass_time }) => write!(
                f,
                "two_cluster a={a} b={b} bridges={bridges} block={} bypasses={bypasses} edge_time={edge_time} bypass_time={bypass_time}",
                match block {
                    BlockKind::Grid => "grid",
                    BlockKind::Complete => "complete",
                }
            ),
        }
    }
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive, got {v}")))
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<NodeRecord>,
    edges: Vec<(usize, usize, f64)>,
}

impl Builder {
    fn node(&mut self, id: String, x: f64, y: f64) -> usize {
        self.nodes.push(NodeRecord { id, x, y });
        self.nodes.len() - 1
    }

    /// An edge of `time` seconds at [`CITY_SPEED`].
    fn edge(&mut self, u: usize, v: usize, time: f64) {
        self.edges.push((u, v, time * CITY_SPEED));
    }

    fn build(self) -> Result<RoadNetwork> {
        let w = digits(self.edges.len()).max(3);
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v, length))| EdgeRecord {
                id: format!("e{i:0w$}"),
                u: self.nodes[u].id.clone(),
                v: self.nodes[v].id.clone(),
                length,
                speed: CITY_SPEED,
            })
            .collect();
        RoadNetwork::from_records(self.nodes, edges)
    }

    /// Lattice of `prefix`-named nodes; returns their indices row-major.
    fn lattice(&mut self, prefix: &str, rows: usize, cols: usize, x0: f64, step: f64, time: f64) -> Vec<usize> {
        let w = digits(rows.max(cols));
        let mut ix = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                ix.push(self.node(format!("{prefix}{r:0w$}{c:0w$}"), x0 + c as f64 * step, r as f64 * step));
            }
        }
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    self.edge(ix[r * cols + c], ix[r * cols + c + 1], time);
                }
                if r + 1 < rows {
                    self.edge(ix[r * cols + c], ix[(r + 1) * cols + c], time);
                }
            }
        }
        ix
    }
}

/// Builds a synthetic city. Only the geometric kind uses `seed`.
pub fn generate_city(spec: &CitySpec, seed: u64) -> Result<RoadNetwork> {
    match *spec {
        CitySpec::Grid { rows, cols, edge_time } => {
            if rows < 2 || cols < 2 {
                return Err(Error::Domain(format!("grid needs rows, cols ≥ 2, got {rows}×{cols}")));
            }
            positive("edge_time", edge_time)?;
            let mut b = Builder::default();
            b.lattice("n", rows, cols, 0.0, edge_time * CITY_SPEED, edge_time);
            b.build()
        }
        CitySpec::Geometric { n, radius, side } => geometric(n, radius, side, seed),
        CitySpec::TwoCluster(ref t) => two_cluster(t),
    }
}

fn geometric(n: usize, radius: f64, side: f64, seed: u64) -> Result<RoadNetwork> {
    if n < 2 {
        return Err(Error::Domain(format!("geometric city needs n ≥ 2, got {n}")));
    }
    positive("radius", radius)?;
    positive("side", side)?;
    let w = digits(n);
    for attempt in 0..GEOMETRIC_RETRIES {
        let mut rng = rng::stream(seed, &[b"geometric", &(attempt as u64).to_le_bytes()]);
        let mut b = Builder::default();
        for i in 0..n {
            b.node(format!("g{i:0w$}"), rng.gen::<f64>() * side, rng.gen::<f64>() * side);
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = (b.nodes[i].x - b.nodes[j].x).hypot(b.nodes[i].y - b.nodes[j].y);
                if d <= radius && d > 0.0 {
                    b.edges.push((i, j, d));
                }
            }
        }
        match b.build() {
            Ok(net) => return Ok(net),
            Err(Error::Validation(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Domain(format!(
        "no connected geometric city with n = {n}, radius = {radius} in {GEOMETRIC_RETRIES} attempts; try a larger radius"
    )))
}

fn isqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// `count` positions spread over `0..len` at floor((i+1)·len/(count+1)).
fn spread(len: usize, count: usize) -> Vec<usize> {
    (0..count).map(|i| (i + 1) * len / (count + 1)).collect()
}

fn two_cluster(spec: &TwoClusterSpec) -> Result<RoadNetwork> {
    let TwoClusterSpec { a, b, bridges, block, bypasses, edge_time, bypass_time } = *spec;
    if bridges == 0 {
        return Err(Error::Domain("two_cluster needs at least one bridge".into()));
    }
    positive("edge_time", edge_time)?;
    positive("bypass_time", bypass_time)?;
    let step = edge_time * CITY_SPEED;
    let mut g = Builder::default();
    // boundary nodes facing the other block, in attachment order
    let (side_a, side_b) = match block {
        BlockKind::Grid => {
            let (ra, rb) = match (isqrt(a), isqrt(b)) {
                (Some(ra), Some(rb)) if ra >= 2 && rb >= 2 => (ra, rb),
                _ => return Err(Error::Domain(format!("grid blocks need square sizes ≥ 4, got {a} and {b}"))),
            };
            let ia = g.lattice("a", ra, ra, 0.0, step, edge_time);
            let ib = g.lattice("b", rb, rb, (ra + 1) as f64 * step, step, edge_time);
            (
                (0..ra).map(|r| ia[r * ra + ra - 1]).collect::<Vec<_>>(),
                (0..rb).map(|r| ib[r * rb]).collect::<Vec<_>>(),
            )
        }
        BlockKind::Complete => {
            if a < 2 || b < 2 {
                return Err(Error::Domain(format!("complete blocks need ≥ 2 nodes, got {a} and {b}")));
            }
            let mut sides = Vec::new();
            for (prefix, size, x0) in [("a", a, 0.0), ("b", b, 2.0 * step)] {
                let w = digits(size);
                let ix: Vec<usize> = (0..size)
                    .map(|i| g.node(format!("{prefix}{i:0w$}"), x0, i as f64 * step))
                    .collect();
                for i in 0..size {
                    for j in i + 1..size {
                        g.edge(ix[i], ix[j], edge_time);
                    }
                }
                sides.push(ix);
            }
            let side_b = sides.pop().expect("two blocks");
            (sides.pop().expect("two blocks"), side_b)
        }
    };
    if bridges > side_a.len().min(side_b.len()) {
        return Err(Error::Domain(format!(
            "{bridges} bridges need {bridges} boundary nodes per block, have {} and {}",
            side_a.len(),
            side_b.len()
        )));
    }
    let ba = spread(side_a.len(), bridges);
    let bb = spread(side_b.len(), bridges);
    for (&i, &j) in ba.iter().zip(&bb) {
        g.edge(side_a[i], side_b[j], edge_time);
    }
    let free_a: Vec<usize> = (0..side_a.len()).filter(|i| !ba.contains(i)).map(|i| side_a[i]).collect();
    let free_b: Vec<usize> = (0..side_b.len()).filter(|i| !bb.contains(i)).map(|i| side_b[i]).collect();
    if bypasses > free_a.len().min(free_b.len()) {
        return Err(Error::Domain(format!(
            "{bypasses} bypasses need that many non-bridge boundary nodes per block, have {} and {}",
            free_a.len(),
            free_b.len()
        )));
    }
    for (i, j) in spread(free_a.len(), bypasses).into_iter().zip(spread(free_b.len(), bypasses)) {
        g.edge(free_a[i], free_b[j], bypass_time);
    }
    g.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{edge_disjoint_paths, read_network, write_edges, write_nodes, NodeIx};

    fn block_of(net: &RoadNetwork, n: NodeIx) -> char {
        net.node(n).id.chars().next().unwrap()
    }

    fn cross_edges(net: &RoadNetwork) -> usize {
        net.edges().iter().filter(|e| block_of(net, e.u) != block_of(net, e.v)).count()
    }

    #[test]
    fn grid_counts() {
        let g = generate_city(&CitySpec::grid(3, 3), 0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (9, 12));
        let g = generate_city(&CitySpec::grid(4, 7), 0).unwrap();
        assert_eq!(g.edge_count(), 4 * 6 + 7 * 3);
        assert!(g.edges().iter().all(|e| e.travel_time() == 60.0));
    }

    #[test]
    fn grid_2x2_is_a_four_cycle() {
        let g = generate_city(&CitySpec::grid(2, 2), 0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 4));
        assert!(g.node_indices().all(|n| g.degree(n) == 2));
        assert!(generate_city(&CitySpec::grid(1, 5), 0).is_err());
    }

    #[test]
    fn two_cluster_has_exact_bridges_and_cut() {
        for block in [BlockKind::Grid, BlockKind::Complete] {
            let spec = CitySpec::TwoCluster(TwoClusterSpec { block, ..TwoClusterSpec::new(16, 16, 2) });
            let g = generate_city(&spec, 0).unwrap();
            assert_eq!(g.node_count(), 32);
            assert_eq!(cross_edges(&g), 2, "{block:?}");
            // every cross-block pair is separated by exactly two edges
            for (s, t) in [("a00", "b00"), ("a33", "b33"), ("a15", "b07")] {
                let (Some(s), Some(t)) = (g.node_ix(s), g.node_ix(t)) else { continue };
                assert_eq!(edge_disjoint_paths(&g, s, t).unwrap().len(), 2);
            }
        }
        let g = generate_city(&CitySpec::two_cluster(16, 16, 2), 0).unwrap();
        let bridges: Vec<(&str, &str)> = g
            .edges()
            .iter()
            .filter(|e| block_of(&g, e.u) != block_of(&g, e.v))
            .map(|e| (g.node(e.u).id.as_str(), g.node(e.v).id.as_str()))
            .collect();
        assert_eq!(bridges, [("a13", "b10"), ("a23", "b20")]);
    }

    #[test]
    fn bypasses_add_slow_roads() {
        let spec = TwoClusterSpec {
            block: BlockKind::Complete,
            bypasses: 4,
            ..TwoClusterSpec::new(10, 10, 2)
        };
        let g = generate_city(&CitySpec::TwoCluster(spec.clone()), 0).unwrap();
        assert_eq!(g.node_count(), 20);
        assert_eq!(g.edge_count(), 2 * 45 + 2 + 4);
        let slow: Vec<f64> = g.edges().iter().filter(|e| block_of(&g, e.u) != block_of(&g, e.v)).map(|e| e.travel_time()).collect();
        assert_eq!(slow, [60.0, 60.0, 300.0, 300.0, 300.0, 300.0]);
        let a = g.node_ix("a0").unwrap();
        let b = g.node_ix("b9").unwrap();
        assert_eq!(edge_disjoint_paths(&g, a, b).unwrap().len(), 6);
        assert!(generate_city(&CitySpec::TwoCluster(TwoClusterSpec { bypasses: 9, ..spec }), 0).is_err());
    }

    #[test]
    fn geometric_is_connected_and_seeded() {
        let spec = CitySpec::Geometric { n: 40, radius: 300.0, side: 1000.0 };
        let g = generate_city(&spec, 7).unwrap();
        assert!(g.is_connected());
        assert_eq!(g, generate_city(&spec, 7).unwrap());
        let tiny = CitySpec::Geometric { n: 40, radius: 1.0, side: 1000.0 };
        let err = generate_city(&tiny, 7).unwrap_err().to_string();
        assert!(err.contains("larger radius"), "{err}");
    }

    #[test]
    fn spec_round_trips_through_text() {
        for s in [
            "grid rows=3 cols=4 edge_time=30",
            "geometric n=20 radius=250 side=1000",
            "two_cluster a=16 b=9 bridges=2 block=grid bypasses=1 edge_time=60 bypass_time=150",
        ] {
            let spec: CitySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        let spec: CitySpec = "two_cluster a=16 b=16 bridges=2".parse().unwrap();
        assert_eq!(spec, CitySpec::two_cluster(16, 16, 2));
        assert!("grid rows=3".parse::<CitySpec>().is_err());
        assert!("grid rows=3 cols=3 colour=red".parse::<CitySpec>().is_err());
        assert!("torus rows=3".parse::<CitySpec>().is_err());
    }

    #[test]
    fn outputs_survive_the_file_loader() {
        let spec = CitySpec::TwoCluster(TwoClusterSpec { bypasses: 1, ..TwoClusterSpec::new(25, 16, 3) });
        let g = generate_city(&spec, 0).unwrap();
        let (mut nodes, mut edges) = (Vec::new(), Vec::new());
        write_nodes(&g, &mut nodes).unwrap();
        write_edges(&g, &mut edges).unwrap();
        let back = read_network(nodes.as_slice(), "nodes.csv", edges.as_slice(), "edges.csv").unwrap();
        assert_eq!(back, g);
    }
}

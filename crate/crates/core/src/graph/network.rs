use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use crate::{Error, Result, Scalar};

/// Dense index of a node inside one [`RoadNetwork`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIx(pub usize);

/// Dense index of an edge inside one [`RoadNetwork`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeIx(pub usize);

impl NodeIx {
    pub fn index(self) -> usize {
        self.0
    }
}

impl EdgeIx {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A junction as it appears in the nodes file.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// A road segment as it appears in the edges file; endpoints by node id.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRecord {
    pub id: String,
    pub u: String,
    pub v: String,
    pub length: f64,
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: String,
    pub u: NodeIx,
    pub v: NodeIx,
    /// meters
    pub length: f64,
    /// meters per second
    pub speed: f64,
}

impl Edge {
    /// Seconds needed to drive the segment at its posted speed.
    pub fn travel_time(&self) -> f64 {
        self.length / self.speed
    }

    /// The endpoint opposite to `n`.
    pub fn other(&self, n: NodeIx) -> NodeIx {
        if n == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, n: NodeIx) -> bool {
        self.u == n || self.v == n
    }
}

/// Undirected, simple, connected road graph. Immutable once built.
///
/// Adjacency lists are kept sorted by edge id so that every traversal that
/// has to break ties does so lexicographically on edge ids.
#[derive(Clone, Debug)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    node_lookup: HashMap<String, NodeIx>,
    edge_lookup: HashMap<String, EdgeIx>,
    adjacency: Vec<Vec<(NodeIx, EdgeIx)>>,
    edge_rank: Vec<usize>,
    edges_by_id: Vec<EdgeIx>,
    nodes_by_id: Vec<NodeIx>,
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl RoadNetwork {
    /// Builds and validates a network; rejects disconnected graphs.
    pub fn from_records(nodes: Vec<NodeRecord>, edges: Vec<EdgeRecord>) -> Result<Self> {
        let net = Self::from_records_allow_disconnected(nodes, edges)?;
        if !net.is_connected() {
            return Err(Error::Validation(format!(
                "network is disconnected ({} components)",
                net.component_labels().1
            )));
        }
        Ok(net)
    }

    /// Same checks as [`RoadNetwork::from_records`] except connectivity.
    ///
    /// Only the analysis routines accept such graphs; simulation needs every
    /// stop reachable.
    pub fn from_records_allow_disconnected(
        nodes: Vec<NodeRecord>,
        edges: Vec<EdgeRecord>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Validation("network has no nodes".into()));
        }
        let mut node_lookup = HashMap::with_capacity(nodes.len());
        let mut out_nodes = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.into_iter().enumerate() {
            if n.id.is_empty() {
                return Err(Error::Validation(format!("node #{i} has an empty id")));
            }
            if node_lookup.insert(n.id.clone(), NodeIx(i)).is_some() {
                return Err(Error::Validation(format!("duplicate node id {}", n.id)));
            }
            out_nodes.push(Node { id: n.id, x: n.x, y: n.y });
        }

        let mut edge_lookup = HashMap::with_capacity(edges.len());
        let mut pairs = HashSet::with_capacity(edges.len());
        let mut out_edges = Vec::with_capacity(edges.len());
        for (i, e) in edges.into_iter().enumerate() {
            let find = |id: &str| {
                node_lookup.get(id).copied().ok_or_else(|| {
                    Error::Validation(format!("edge {} references unknown node {id}", e.id))
                })
            };
            let u = find(&e.u)?;
            let v = find(&e.v)?;
            if u == v {
                return Err(Error::Validation(format!("edge {} is a self-loop on {}", e.id, e.u)));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::Validation(format!(
                    "edge {} has non-positive length {}",
                    e.id, e.length
                )));
            }
            if !(e.speed.is_finite() && e.speed > 0.0) {
                return Err(Error::Validation(format!(
                    "edge {} has non-positive speed {}",
                    e.id, e.speed
                )));
            }
            let tt = e.length / e.speed;
            if !(tt.is_finite() && tt > 0.0) {
                return Err(Error::Validation(format!(
                    "edge {} has degenerate travel time {tt}",
                    e.id
                )));
            }
            let key = if u < v { (u, v) } else { (v, u) };
            if !pairs.insert(key) {
                return Err(Error::Validation(format!(
                    "edge {} duplicates the road between {} and {}",
                    e.id, e.u, e.v
                )));
            }
            if edge_lookup.insert(e.id.clone(), EdgeIx(i)).is_some() {
                return Err(Error::Validation(format!("duplicate edge id {}", e.id)));
            }
            out_edges.push(Edge {
                id: e.id,
                u,
                v,
                length: e.length,
                speed: e.speed,
            });
        }

        let mut edges_by_id: Vec<EdgeIx> = (0..out_edges.len()).map(EdgeIx).collect();
        edges_by_id.sort_by(|a, b| out_edges[a.0].id.cmp(&out_edges[b.0].id));
        let mut edge_rank = vec![0; out_edges.len()];
        for (rank, e) in edges_by_id.iter().enumerate() {
            edge_rank[e.0] = rank;
        }
        let mut nodes_by_id: Vec<NodeIx> = (0..out_nodes.len()).map(NodeIx).collect();
        nodes_by_id.sort_by(|a, b| out_nodes[a.0].id.cmp(&out_nodes[b.0].id));

        let mut adjacency = vec![Vec::new(); out_nodes.len()];
        for &e in &edges_by_id {
            let edge = &out_edges[e.0];
            adjacency[edge.u.0].push((edge.v, e));
            adjacency[edge.v.0].push((edge.u, e));
        }

        Ok(RoadNetwork {
            nodes: out_nodes,
            edges: out_edges,
            node_lookup,
            edge_lookup,
            adjacency,
            edge_rank,
            edges_by_id,
            nodes_by_id,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, n: NodeIx) -> &Node {
        &self.nodes[n.0]
    }

    pub fn edge(&self, e: EdgeIx) -> &Edge {
        &self.edges[e.0]
    }

    pub fn node_ix(&self, id: &str) -> Option<NodeIx> {
        self.node_lookup.get(id).copied()
    }

    pub fn edge_ix(&self, id: &str) -> Option<EdgeIx> {
        self.edge_lookup.get(id).copied()
    }

    /// Looks up a node id, failing with a domain error naming it.
    pub fn require_node(&self, id: &str) -> Result<NodeIx> {
        self.node_ix(id)
            .ok_or_else(|| Error::Domain(format!("unknown node {id}")))
    }

    pub fn require_edge(&self, id: &str) -> Result<EdgeIx> {
        self.edge_ix(id)
            .ok_or_else(|| Error::Domain(format!("unknown edge {id}")))
    }

    pub fn node_indices(&self) -> impl ExactSizeIterator<Item = NodeIx> {
        (0..self.nodes.len()).map(NodeIx)
    }

    pub fn edge_indices(&self) -> impl ExactSizeIterator<Item = EdgeIx> {
        (0..self.edges.len()).map(EdgeIx)
    }

    /// Incident `(neighbor, edge)` pairs in edge-id order.
    pub fn neighbors(&self, n: NodeIx) -> &[(NodeIx, EdgeIx)] {
        &self.adjacency[n.0]
    }

    pub fn degree(&self, n: NodeIx) -> usize {
        self.adjacency[n.0].len()
    }

    /// Position of the edge in lexicographic edge-id order.
    pub fn edge_rank(&self, e: EdgeIx) -> usize {
        self.edge_rank[e.0]
    }

    /// All edges sorted by edge id.
    pub fn edges_by_id(&self) -> &[EdgeIx] {
        &self.edges_by_id
    }

    /// All nodes sorted by node id.
    pub fn nodes_by_id(&self) -> &[NodeIx] {
        &self.nodes_by_id
    }

    /// Edge between `a` and `b`, if any.
    pub fn edge_between(&self, a: NodeIx, b: NodeIx) -> Option<EdgeIx> {
        self.adjacency[a.0]
            .iter()
            .find(|(n, _)| *n == b)
            .map(|&(_, e)| e)
    }

    /// Travel time of every edge, indexed by `EdgeIx`.
    pub fn travel_times(&self) -> Vec<f64> {
        self.edges.iter().map(Edge::travel_time).collect()
    }

    pub fn travel_times_as<T: Scalar>(&self) -> Vec<T> {
        self.edges.iter().map(|e| T::lit(e.travel_time())).collect()
    }

    /// Component label per node and the number of components.
    pub fn component_labels(&self) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.nodes.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.nodes.len() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if label[v.0] == usize::MAX {
                        label[v.0] = count;
                        queue.push_back(v.0);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.component_labels().1 == 1
    }

    /// The records this network was built from, in input order.
    pub fn to_records(&self) -> (Vec<NodeRecord>, Vec<EdgeRecord>) {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id.clone(),
                x: n.x,
                y: n.y,
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeRecord {
                id: e.id.clone(),
                u: self.nodes[e.u.0].id.clone(),
                v: self.nodes[e.v.0].id.clone(),
                length: e.length,
                speed: e.speed,
            })
            .collect();
        (nodes, edges)
    }
}

/// A set of distinct edges of one network, kept in edge-id order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeSet {
    edges: Vec<EdgeIx>,
}

impl EdgeSet {
    pub fn empty() -> Self {
        EdgeSet::default()
    }

    /// Validates membership and rejects duplicates.
    pub fn new(net: &RoadNetwork, edges: impl IntoIterator<Item = EdgeIx>) -> Result<Self> {
        let mut out: Vec<EdgeIx> = edges.into_iter().collect();
        if let Some(bad) = out.iter().find(|e| e.0 >= net.edge_count()) {
            return Err(Error::Domain(format!("edge index {} out of range", bad.0)));
        }
        out.sort_by_key(|&e| net.edge_rank(e));
        if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!(
                "edge {} listed twice",
                net.edge(w[0]).id
            )));
        }
        Ok(EdgeSet { edges: out })
    }

    /// Resolves edge ids against `net`.
    pub fn from_ids<S: AsRef<str>>(net: &RoadNetwork, ids: &[S]) -> Result<Self> {
        let edges = ids
            .iter()
            .map(|id| net.require_edge(id.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(net, edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeIx> + '_ {
        self.edges.iter().copied()
    }

    pub fn as_slice(&self) -> &[EdgeIx] {
        &self.edges
    }

    pub fn contains(&self, e: EdgeIx) -> bool {
        self.edges.contains(&e)
    }

    /// Membership mask indexed by `EdgeIx`.
    pub fn mask(&self, edge_count: usize) -> Vec<bool> {
        let mut mask = vec![false; edge_count];
        for e in &self.edges {
            mask[e.0] = true;
        }
        mask
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.edges.iter().all(|e| other.edges.contains(e))
    }

    pub fn ids<'a>(&'a self, net: &'a RoadNetwork) -> impl Iterator<Item = &'a str> + 'a {
        self.edges.iter().map(move |&e| net.edge(e).id.as_str())
    }
}

impl fmt::Display for NodeIx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeIx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

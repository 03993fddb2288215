//! Road-network representation, ingestion and the path/cut queries every
//! other module builds on.

mod cut;
mod flow;
pub(crate) mod io;
mod network;
mod paths;

pub use cut::{conductance, cut_size};
pub use flow::edge_disjoint_paths;
pub use io::{load_network, read_network, write_edges, write_nodes};
pub use network::{Edge, EdgeIx, EdgeRecord, EdgeSet, Node, NodeIx, NodeRecord, RoadNetwork};
pub use paths::{shortest_distances, shortest_path, Path};
pub(crate) use paths::check_weights;

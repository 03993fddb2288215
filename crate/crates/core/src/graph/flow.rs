use std::collections::VecDeque;

use super::{EdgeIx, NodeIx, Path, RoadNetwork};
use crate::{Error, Result};

/// A maximum set of pairwise edge-disjoint `src → dst` paths.
///
/// Unit-capacity max-flow (BFS augmentation, neighbors in edge-id order)
/// followed by flow decomposition; cycles picked up while tracing the flow
/// are erased. Path weights are travel times.
pub fn edge_disjoint_paths(net: &RoadNetwork, src: NodeIx, dst: NodeIx) -> Result<Vec<Path<f64>>> {
    if src == dst {
        return Err(Error::Domain("edge-disjoint paths need distinct endpoints".into()));
    }
    let m = net.edge_count();
    // flow[e] in {-1, 0, 1}; +1 means u -> v
    let mut flow = vec![0i8; m];
    let dir = |e: EdgeIx, from: NodeIx| -> i8 {
        if net.edge(e).u == from {
            1
        } else {
            -1
        }
    };

    loop {
        let mut pred: Vec<Option<(NodeIx, EdgeIx)>> = vec![None; net.node_count()];
        let mut seen = vec![false; net.node_count()];
        seen[src.0] = true;
        let mut queue = VecDeque::from([src]);
        'bfs: while let Some(u) = queue.pop_front() {
            for &(v, e) in net.neighbors(u) {
                if seen[v.0] {
                    continue;
                }
                // residual capacity in direction u -> v
                if flow[e.0] * dir(e, u) < 1 {
                    seen[v.0] = true;
                    pred[v.0] = Some((u, e));
                    if v == dst {
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        if !seen[dst.0] {
            break;
        }
        let mut at = dst;
        while let Some((u, e)) = pred[at.0] {
            flow[e.0] += dir(e, u);
            at = u;
        }
    }

    let mut paths = Vec::new();
    loop {
        let mut nodes = vec![src];
        let mut edges: Vec<EdgeIx> = Vec::new();
        let mut at = src;
        while at != dst {
            let Some(&(v, e)) = net
                .neighbors(at)
                .iter()
                .find(|&&(_, e)| flow[e.0] * dir(e, at) == 1)
            else {
                break;
            };
            flow[e.0] = 0;
            // loop erasure: if v is already on the walk, cut back to it
            if let Some(pos) = nodes.iter().position(|&n| n == v) {
                nodes.truncate(pos + 1);
                edges.truncate(pos);
            } else {
                nodes.push(v);
                edges.push(e);
            }
            at = v;
        }
        if at != dst {
            break;
        }
        let weight = edges.iter().map(|&e| net.edge(e).travel_time()).sum();
        paths.push(Path { nodes, edges, weight });
    }
    Ok(paths)
}

use super::{NodeIx, RoadNetwork};
use crate::{Error, Result, Scalar};

fn membership(net: &RoadNetwork, part: &[NodeIx]) -> Result<Vec<bool>> {
    let mut inside = vec![false; net.node_count()];
    for &n in part {
        if n.0 >= net.node_count() {
            return Err(Error::Domain(format!("node index {} out of range", n.0)));
        }
        inside[n.0] = true;
    }
    let count = inside.iter().filter(|&&b| b).count();
    if count == 0 || count == net.node_count() {
        return Err(Error::Domain(
            "conductance needs a nonempty proper subset of nodes".into(),
        ));
    }
    Ok(inside)
}

/// Number of edges with exactly one endpoint in `part`.
pub fn cut_size(net: &RoadNetwork, part: &[NodeIx]) -> Result<usize> {
    let inside = membership(net, part)?;
    Ok(net
        .edges()
        .iter()
        .filter(|e| inside[e.u.0] != inside[e.v.0])
        .count())
}

/// `|cut| / min(vol(part), vol(rest))` with volume the sum of degrees.
pub fn conductance<T: Scalar>(net: &RoadNetwork, part: &[NodeIx]) -> Result<T> {
    let inside = membership(net, part)?;
    let mut cut = 0usize;
    for e in net.edges() {
        if inside[e.u.0] != inside[e.v.0] {
            cut += 1;
        }
    }
    let vol_in: usize = net
        .node_indices()
        .filter(|n| inside[n.0])
        .map(|n| net.degree(n))
        .sum();
    let vol_out = 2 * net.edge_count() - vol_in;
    let denom = vol_in.min(vol_out);
    if denom == 0 {
        // an isolated side; only reachable for graphs built without the
        // connectivity check
        return Ok(if cut == 0 { T::zero() } else { T::one() });
    }
    Ok(T::lit(cut as f64) / T::lit(denom as f64))
}

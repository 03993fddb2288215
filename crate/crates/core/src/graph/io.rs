use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{EdgeRecord, NodeRecord, RoadNetwork};
use crate::{Error, Result};

pub(crate) const NODES_HEADER: [&str; 3] = ["node_id", "x", "y"];
pub(crate) const EDGES_HEADER: [&str; 5] = ["edge_id", "u", "v", "length_m", "speed_mps"];

/// Reads `node_id,x,y` and `edge_id,u,v,length_m,speed_mps` files and
/// validates the resulting network.
pub fn load_network(nodes_file: impl AsRef<Path>, edges_file: impl AsRef<Path>) -> Result<RoadNetwork> {
    let nodes_file = nodes_file.as_ref();
    let edges_file = edges_file.as_ref();
    let nodes = File::open(nodes_file).map_err(|e| Error::io(nodes_file, e))?;
    let edges = File::open(edges_file).map_err(|e| Error::io(edges_file, e))?;
    read_network(
        nodes,
        &nodes_file.display().to_string(),
        edges,
        &edges_file.display().to_string(),
    )
}

/// Parses a network from readers; `*_name` labels parse errors.
pub fn read_network(
    nodes: impl Read,
    nodes_name: &str,
    edges: impl Read,
    edges_name: &str,
) -> Result<RoadNetwork> {
    let nodes = parse_nodes(nodes, nodes_name)?;
    let edges = parse_edges(edges, edges_name)?;
    RoadNetwork::from_records(nodes, edges)
}

pub(crate) fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(r)
}

pub(crate) fn check_header<R: Read>(
    reader: &mut csv::Reader<R>,
    expected: &[&str],
    file: &str,
) -> Result<()> {
    let header = reader.headers().map_err(|e| csv_error(e, file))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            file: file.into(),
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error, file: &str) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        file: file.into(),
        line,
        message: e.to_string(),
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    raw: &str,
    what: &str,
    file: &str,
    line: usize,
) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        file: file.into(),
        line,
        message: format!("cannot parse {what} from `{raw}`"),
    })
}

fn parse_nodes(r: impl Read, file: &str) -> Result<Vec<NodeRecord>> {
    let mut reader = csv_reader(r);
    check_header(&mut reader, &NODES_HEADER, file)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(e, file))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        out.push(NodeRecord {
            id: rec[0].to_string(),
            x: parse_field(&rec[1], "x", file, line)?,
            y: parse_field(&rec[2], "y", file, line)?,
        });
    }
    Ok(out)
}

fn parse_edges(r: impl Read, file: &str) -> Result<Vec<EdgeRecord>> {
    let mut reader = csv_reader(r);
    check_header(&mut reader, &EDGES_HEADER, file)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(e, file))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        out.push(EdgeRecord {
            id: rec[0].to_string(),
            u: rec[1].to_string(),
            v: rec[2].to_string(),
            length: parse_field(&rec[3], "length_m", file, line)?,
            speed: parse_field(&rec[4], "speed_mps", file, line)?,
        });
    }
    Ok(out)
}

pub fn write_nodes(net: &RoadNetwork, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", NODES_HEADER.join(","))?;
    for n in net.nodes() {
        writeln!(w, "{},{},{}", n.id, n.x, n.y)?;
    }
    Ok(())
}

pub fn write_edges(net: &RoadNetwork, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", EDGES_HEADER.join(","))?;
    for e in net.edges() {
        writeln!(
            w,
            "{},{},{},{},{}",
            e.id,
            net.node(e.u).id,
            net.node(e.v).id,
            e.length,
            e.speed
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE_NODES: &str = "node_id,x,y\nA,0,0\nB,1,0\nC,1,1\nD,0,1\n";
    const SQUARE_EDGES: &str = "edge_id,u,v,length_m,speed_mps\n\
        ab,A,B,100,10\nbc,B,C,100,10\ncd,C,D,100,10\nda,D,A,100,10\n";

    #[test]
    fn square_cycle_loads() {
        let net = read_network(SQUARE_NODES.as_bytes(), "n", SQUARE_EDGES.as_bytes(), "e").unwrap();
        assert_eq!(net.node_count(), 4);
        assert_eq!(net.edge_count(), 4);
        assert!(net.is_connected());
        assert!(net.node_indices().all(|n| net.degree(n) == 2));
    }

    #[test]
    fn malformed_row_reports_line() {
        let edges = "edge_id,u,v,length_m,speed_mps\nab,A,B,100,10\nbc,B,C,abc,10\n";
        let err = read_network(SQUARE_NODES.as_bytes(), "n", edges.as_bytes(), "edges.csv").unwrap_err();
        match err {
            Error::Parse { file, line, .. } => {
                assert_eq!(file, "edges.csv");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other}"),
        }
        let short = "edge_id,u,v,length_m,speed_mps\nab,A,B,100\n";
        assert!(matches!(
            read_network(SQUARE_NODES.as_bytes(), "n", short.as_bytes(), "e"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = read_network("id,x,y\nA,0,0\n".as_bytes(), "n", SQUARE_EDGES.as_bytes(), "e");
        assert!(matches!(err, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn writers_round_trip_bytes() {
        let net = read_network(SQUARE_NODES.as_bytes(), "n", SQUARE_EDGES.as_bytes(), "e").unwrap();
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        write_nodes(&net, &mut nodes).unwrap();
        write_edges(&net, &mut edges).unwrap();
        assert_eq!(String::from_utf8(nodes).unwrap(), SQUARE_NODES);
        assert_eq!(String::from_utf8(edges).unwrap(), SQUARE_EDGES);
    }
}

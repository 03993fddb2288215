use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::graph::io::{check_header, csv_error, csv_reader, parse_field};
use crate::sim::{JobCard, Stop};
use crate::{Error, Result};

pub const JOBCARDS_HEADER: [&str; 5] = ["courier_id", "seq", "node_id", "window_start_s", "window_end_s"];

pub fn parse_jobcards(path: impl AsRef<Path>) -> Result<Vec<JobCard>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jobcards(file, &path.display().to_string())
}

struct Row {
    node: String,
    start: Option<f64>,
    end: Option<f64>,
    line: usize,
}

/// Reads job cards; couriers keep their order of first appearance and
/// stops are sorted by `seq`.
///
/// The `seq` 0 row is the warehouse. Its window fields are normally
/// empty; a `window_start_s` there sets the day start (default 0).
pub fn read_jobcards(r: impl Read, name: &str) -> Result<Vec<JobCard>> {
    let mut rdr = csv_reader(r);
    check_header(&mut rdr, &JOBCARDS_HEADER, name)?;
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, BTreeMap<u64, Row>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, name))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let courier = rec[0].to_string();
        if courier.is_empty() {
            return Err(Error::Parse { file: name.into(), line, message: "empty courier_id".into() });
        }
        let seq: u64 = parse_field(&rec[1], "seq", name, line)?;
        let optional = |raw: &str, what: &str| -> Result<Option<f64>> {
            if raw.is_empty() {
                Ok(None)
            } else {
                parse_field(raw, what, name, line).map(Some)
            }
        };
        let row = Row {
            node: rec[2].to_string(),
            start: optional(&rec[3], "window_start_s")?,
            end: optional(&rec[4], "window_end_s")?,
            line,
        };
        if !rows.contains_key(&courier) {
            order.push(courier.clone());
        }
        if rows.entry(courier.clone()).or_default().insert(seq, row).is_some() {
            return Err(Error::Parse {
                file: name.into(),
                line,
                message: format!("courier {courier} repeats seq {seq}"),
            });
        }
    }
    order
        .into_iter()
        .map(|courier| {
            let mut seqs = rows.remove(&courier).expect("listed");
            let home = seqs
                .remove(&0)
                .ok_or_else(|| Error::Validation(format!("courier {courier} has no seq 0 warehouse row")))?;
            let stops = seqs
                .into_values()
                .map(|row| match (row.start, row.end) {
                    (Some(window_start), Some(window_end)) => Ok(Stop { node_id: row.node, window_start, window_end }),
                    _ => Err(Error::Parse {
                        file: name.into(),
                        line: row.line,
                        message: format!("courier {courier}: delivery rows need both window fields"),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            let card = JobCard {
                courier_id: courier,
                warehouse: home.node,
                stops,
                day_start: home.start.unwrap_or(0.0),
            };
            card.validate()?;
            Ok(card)
        })
        .collect()
}

pub fn write_jobcards(cards: &[JobCard], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", JOBCARDS_HEADER.join(","))?;
    for c in cards {
        if c.day_start == 0.0 {
            writeln!(w, "{},0,{},,", c.courier_id, c.warehouse)?;
        } else {
            writeln!(w, "{},0,{},{},", c.courier_id, c.warehouse, c.day_start)?;
        }
        for (i, s) in c.stops.iter().enumerate() {
            writeln!(w, "{},{},{},{},{}", c.courier_id, i + 1, s.node_id, s.window_start, s.window_end)?;
        }
    }
    Ok(())
}

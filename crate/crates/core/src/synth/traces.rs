use std::io::Write;

use rand::seq::SliceRandom;

use crate::graph::{shortest_distances, NodeIx, RoadNetwork};
use crate::sim::{JobCard, Stop};
use crate::{rng, Error, Result};

/// How far a synthetic leg may stray from its base travel time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceTolerance {
    pub relative_tolerance: f64,
    /// Keep only this many candidates closest to the base time before the
    /// uniform draw; `None` keeps all.
    pub max_candidates: Option<usize>,
}

impl Default for TraceTolerance {
    fn default() -> Self {
        TraceTolerance {
            relative_tolerance: 0.10,
            max_candidates: None,
        }
    }
}

impl TraceTolerance {
    pub fn new(relative_tolerance: f64, max_candidates: Option<usize>) -> Result<Self> {
        if !(relative_tolerance > 0.0 && relative_tolerance < 1.0) {
            return Err(Error::Domain(format!(
                "relative tolerance must lie in (0, 1), got {relative_tolerance}"
            )));
        }
        if max_candidates == Some(0) {
            return Err(Error::Domain("max_candidates must be at least 1".into()));
        }
        Ok(TraceTolerance { relative_tolerance, max_candidates })
    }
}

/// Times the tolerance may be doubled when a leg has no candidate.
pub const MAX_WIDENINGS: usize = 4;

/// One audited leg, ending at stop `seq` (1-based; the leg from the
/// warehouse ends at seq 1).
#[derive(Clone, Debug, PartialEq)]
pub struct LegAudit {
    pub courier_id: String,
    pub seq: usize,
    pub base_leg_s: f64,
    pub synth_leg_s: f64,
    pub tolerance_used: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthesis {
    pub cards: Vec<JobCard>,
    pub audit: Vec<LegAudit>,
}

/// Moves each card onto `target`, keeping consecutive travel times.
///
/// The warehouse is drawn uniformly from the target nodes. Each stop is
/// then drawn uniformly among target nodes whose shortest travel time
/// from the previous synthetic location is within the tolerance of the
/// base leg; with no such node the tolerance doubles, up to
/// [`MAX_WIDENINGS`] times. Windows and day start are copied unchanged.
pub fn synthesize_traces(
    base: &[JobCard],
    base_net: &RoadNetwork,
    target: &RoadNetwork,
    tol: TraceTolerance,
    seed: u64,
) -> Result<Synthesis> {
    let base_times = base_net.travel_times();
    let target_times = target.travel_times();
    let mut cards = Vec::with_capacity(base.len());
    let mut audit = Vec::new();
    for card in base {
        card.validate()?;
        let way = card.waypoints(base_net)?;
        let mut rng = rng::stream(seed, &[b"synth", card.courier_id.as_bytes()]);
        let all: Vec<NodeIx> = target.nodes_by_id().to_vec();
        let mut at = *all.choose(&mut rng).expect("network has nodes");
        let warehouse = target.node(at).id.clone();
        let mut stops = Vec::with_capacity(card.stops.len());
        for (i, stop) in card.stops.iter().enumerate() {
            let base_leg = shortest_distances(base_net, way[i], &base_times)?[way[i + 1].0];
            let dist = shortest_distances(target, at, &target_times)?;
            let mut tolerance = tol.relative_tolerance;
            let mut pick = None;
            for _ in 0..=MAX_WIDENINGS {
                let mut candidates: Vec<NodeIx> = all
                    .iter()
                    .copied()
                    .filter(|n| (dist[n.0] - base_leg).abs() <= tolerance * base_leg)
                    .collect();
                if let Some(cap) = tol.max_candidates {
                    // stable sort keeps node-id order among equal gaps
                    candidates.sort_by(|a, b| (dist[a.0] - base_leg).abs().total_cmp(&(dist[b.0] - base_leg).abs()));
                    candidates.truncate(cap);
                }
                if let Some(&n) = candidates.choose(&mut rng) {
                    pick = Some(n);
                    break;
                }
                tolerance *= 2.0;
            }
            let Some(next) = pick else {
                return Err(Error::InfeasibleTrace(format!(
                    "courier {} leg to stop {}: no target node within {} of the base {} s (after {MAX_WIDENINGS} widenings)",
                    card.courier_id,
                    i + 1,
                    tolerance / 2.0,
                    base_leg
                )));
            };
            audit.push(LegAudit {
                courier_id: card.courier_id.clone(),
                seq: i + 1,
                base_leg_s: base_leg,
                synth_leg_s: dist[next.0],
                tolerance_used: tolerance,
            });
            stops.push(Stop {
                node_id: target.node(next).id.clone(),
                ..stop.clone()
            });
            at = next;
        }
        cards.push(JobCard {
            courier_id: card.courier_id.clone(),
            warehouse,
            stops,
            day_start: card.day_start,
        });
    }
    Ok(Synthesis { cards, audit })
}

pub const AUDIT_HEADER: &str = "courier_id,seq,base_leg_s,synth_leg_s,tolerance_used";

pub fn write_audit(audit: &[LegAudit], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{AUDIT_HEADER}")?;
    for a in audit {
        writeln!(w, "{},{},{},{},{}", a.courier_id, a.seq, a.base_leg_s, a.synth_leg_s, a.tolerance_used)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_city, CitySpec};

    fn grid(rows: usize, cols: usize) -> RoadNetwork {
        generate_city(&CitySpec::Grid { rows, cols, edge_time: 60.0 }, 0).unwrap()
    }

    fn card(net: &RoadNetwork, id: &str, nodes: &[usize], window: f64) -> JobCard {
        JobCard {
            courier_id: id.into(),
            warehouse: net.nodes()[nodes[0]].id.clone(),
            stops: nodes[1..]
                .iter()
                .enumerate()
                .map(|(i, &n)| Stop {
                    node_id: net.nodes()[n].id.clone(),
                    window_start: 1000.0 * i as f64,
                    window_end: 1000.0 * i as f64 + window,
                })
                .collect(),
            day_start: 0.0,
        }
    }

    #[test]
    fn same_network_stays_within_tolerance() {
        let g = grid(6, 6);
        let base = vec![card(&g, "c1", &[0, 8, 35, 14, 3], 7_920.0), card(&g, "c2", &[20, 21, 22], 600.0)];
        let tol = TraceTolerance::default();
        let out = synthesize_traces(&base, &g, &g, tol, 3).unwrap();
        assert_eq!(out.cards.len(), 2);
        assert_eq!(out.audit.len(), 6);
        for a in &out.audit {
            assert!((a.synth_leg_s - a.base_leg_s).abs() <= 0.10 * a.base_leg_s, "{a:?}");
            assert_eq!(a.tolerance_used, 0.10);
        }
        for (b, s) in base.iter().zip(&out.cards) {
            for (x, y) in b.stops.iter().zip(&s.stops) {
                assert_eq!(x.window(), y.window());
                assert_eq!(x.window_start, y.window_start);
            }
        }
        assert_eq!(out.cards[0].stops[0].window(), 7_920.0);
    }

    #[test]
    fn leg_of_480s_lands_in_band() {
        // 8 grid steps of 60 s on the base
        let base_net = grid(9, 9);
        let target = grid(12, 12);
        let base = vec![card(&base_net, "c", &[0, 8], 100.0)];
        for seed in 0..20 {
            let out = synthesize_traces(&base, &base_net, &target, TraceTolerance::default(), seed).unwrap();
            let a = &out.audit[0];
            assert_eq!(a.base_leg_s, 480.0);
            assert!((432.0..=528.0).contains(&a.synth_leg_s));
        }
    }

    #[test]
    fn widening_is_recorded() {
        // the only legs available on a 2×2 target are 60 s and 120 s
        let base_net = grid(6, 6);
        let target = grid(2, 2);
        let base = vec![card(&base_net, "c", &[0, 2], 100.0)];
        let out = synthesize_traces(&base, &base_net, &target, TraceTolerance::new(0.05, None).unwrap(), 0).unwrap();
        assert_eq!(out.audit[0].synth_leg_s, 120.0);
        assert_eq!(out.audit[0].tolerance_used, 0.05);
        let base = vec![card(&base_net, "c", &[0, 3], 100.0)];
        let out = synthesize_traces(&base, &base_net, &target, TraceTolerance::new(0.05, None).unwrap(), 0).unwrap();
        assert_eq!(out.audit[0].synth_leg_s, 120.0);
        assert_eq!(out.audit[0].tolerance_used, 0.4);
        let base = vec![card(&base_net, "c", &[0, 35], 100.0)];
        assert!(matches!(
            synthesize_traces(&base, &base_net, &target, TraceTolerance::new(0.01, None).unwrap(), 0),
            Err(Error::InfeasibleTrace(_))
        ));
    }

    #[test]
    fn deterministic_and_capped() {
        let g = grid(8, 8);
        let base = vec![card(&g, "c1", &[0, 9, 50, 13], 100.0)];
        let tol = TraceTolerance::new(0.2, Some(1)).unwrap();
        let a = synthesize_traces(&base, &g, &g, tol, 5).unwrap();
        assert_eq!(a, synthesize_traces(&base, &g, &g, tol, 5).unwrap());
        for leg in &a.audit {
            // one candidate left: the closest, an exact match on a grid
            assert_eq!(leg.synth_leg_s, leg.base_leg_s);
        }
        assert!(TraceTolerance::new(1.0, None).is_err());
        assert!(TraceTolerance::new(0.1, Some(0)).is_err());
    }
}

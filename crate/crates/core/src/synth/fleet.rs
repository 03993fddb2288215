use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::graph::{shortest_distances, NodeIx, RoadNetwork};
use crate::sim::{JobCard, Stop};
use crate::synth::city::{split_pairs, take};
use crate::{rng, Error, Result};

/// Parameters for [`generate_fleet`].
#[derive(Clone, Debug, PartialEq)]
pub struct FleetSpec {
    pub couriers: usize,
    pub stops: usize,
    /// Window size in seconds, opening at the unattacked arrival time.
    pub window: f64,
    /// Node-id prefix for warehouses and every second stop.
    pub home: Option<String>,
    /// Node-id prefix for the first, third, ... stop.
    pub away: Option<String>,
}

/// Parses `couriers=40 stops=2 window=120 [home=a away=b]`.
impl FromStr for FleetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, mut p) = split_pairs(&format!("fleet {s}"))?;
        debug_assert_eq!(head, "fleet");
        let spec = FleetSpec {
            couriers: take(&mut p, "couriers", None)?,
            stops: take(&mut p, "stops", None)?,
            window: take(&mut p, "window", None)?,
            home: take(&mut p, "home", Some(String::new())).map(|s| Some(s).filter(|s| !s.is_empty()))?,
            away: take(&mut p, "away", Some(String::new())).map(|s| Some(s).filter(|s| !s.is_empty()))?,
        };
        if let Some((k, _)) = p.first() {
            return Err(Error::Validation(format!("unknown fleet key `{k}`")));
        }
        Ok(spec)
    }
}

impl fmt::Display for FleetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "couriers={} stops={} window={}", self.couriers, self.stops, self.window)?;
        if let Some(h) = &self.home {
            write!(f, " home={h}")?;
        }
        if let Some(a) = &self.away {
            write!(f, " away={a}")?;
        }
        Ok(())
    }
}

/// Random job cards whose windows open when an unhindered shortest-path
/// courier would arrive, so any delay longer than the window is late.
///
/// Couriers are named `c000`, `c001`, ... and start at time 0. Each stop
/// differs from the location before it.
pub fn generate_fleet(net: &RoadNetwork, spec: &FleetSpec, seed: u64) -> Result<Vec<JobCard>> {
    if spec.couriers == 0 || spec.stops == 0 {
        return Err(Error::Domain("a fleet needs at least one courier and one stop".into()));
    }
    if !(spec.window > 0.0 && spec.window.is_finite()) {
        return Err(Error::Domain(format!("window must be positive, got {}", spec.window)));
    }
    let pool = |prefix: &Option<String>| -> Result<Vec<NodeIx>> {
        let nodes: Vec<NodeIx> = net
            .nodes_by_id()
            .iter()
            .copied()
            .filter(|&n| prefix.as_deref().map_or(true, |p| net.node(n).id.starts_with(p)))
            .collect();
        if nodes.is_empty() {
            return Err(Error::Domain(format!("no node id starts with `{}`", prefix.as_deref().unwrap_or(""))));
        }
        Ok(nodes)
    };
    let home = pool(&spec.home)?;
    let away = pool(&spec.away)?;
    let times = net.travel_times();
    let w = spec.couriers.saturating_sub(1).max(1).to_string().len().max(3);
    (0..spec.couriers)
        .map(|c| {
            let id = format!("c{c:0w$}");
            let mut rng = rng::stream(seed, &[b"fleet", id.as_bytes()]);
            let warehouse = *home.choose(&mut rng).expect("nonempty");
            let (mut at, mut t) = (warehouse, 0.0);
            let mut stops = Vec::with_capacity(spec.stops);
            for i in 0..spec.stops {
                let candidates: Vec<NodeIx> = if i % 2 == 0 { &away } else { &home }
                    .iter()
                    .copied()
                    .filter(|&n| n != at)
                    .collect();
                let next = *candidates
                    .choose(&mut rng)
                    .ok_or_else(|| Error::Domain("stop pool has a single node".into()))?;
                t += shortest_distances(net, at, &times)?[next.0];
                stops.push(Stop {
                    node_id: net.node(next).id.clone(),
                    window_start: t,
                    window_end: t + spec.window,
                });
                at = next;
            }
            Ok(JobCard {
                courier_id: id,
                warehouse: net.node(warehouse).id.clone(),
                stops,
                day_start: 0.0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::AttackPlan;
    use crate::defense::{plan_route, DefenseStrategy};
    use crate::graph::EdgeSet;
    use crate::sim::{run_tour, DEFAULT_AMBUSH_DELAY};
    use crate::synth::{generate_city, CitySpec};

    #[test]
    fn clean_tours_arrive_at_window_open() {
        let g = generate_city(&CitySpec::grid(5, 5), 0).unwrap();
        let spec: FleetSpec = "couriers=6 stops=3 window=120".parse().unwrap();
        let fleet = generate_fleet(&g, &spec, 1).unwrap();
        assert_eq!(fleet.len(), 6);
        for card in &fleet {
            let plan = plan_route(&g, card, DefenseStrategy::Shortest, 0).unwrap();
            let tour = run_tour(&g, &plan, card, &EdgeSet::empty(), DEFAULT_AMBUSH_DELAY).unwrap();
            assert_eq!(tour.late_count(), 0);
            for (a, s) in tour.arrivals.iter().zip(&card.stops) {
                assert_eq!(a.unwrap(), s.window_start);
                assert_eq!(s.window(), 120.0);
            }
        }
        assert_eq!(fleet, generate_fleet(&g, &spec, 1).unwrap());
        assert_ne!(fleet, generate_fleet(&g, &spec, 2).unwrap());
    }

    #[test]
    fn home_and_away_alternate() {
        let g = generate_city(&CitySpec::two_cluster(16, 16, 2), 0).unwrap();
        let spec: FleetSpec = "couriers=10 stops=3 window=60 home=a away=b".parse().unwrap();
        for card in generate_fleet(&g, &spec, 0).unwrap() {
            assert!(card.warehouse.starts_with('a'));
            let blocks: Vec<char> = card.stops.iter().map(|s| s.node_id.chars().next().unwrap()).collect();
            assert_eq!(blocks, ['b', 'a', 'b']);
            // every cross leg runs over a bridge, so the bridges are enough
            let bridges = EdgeSet::new(
                &g,
                g.edge_indices().filter(|&e| g.node(g.edge(e).u).id[..1] != g.node(g.edge(e).v).id[..1]),
            )
            .unwrap();
            assert_eq!(bridges.len(), 2);
            let plan = AttackPlan { strategy: crate::attack::AttackStrategy::Betweenness, edges: bridges, seed: 0 };
            let route = plan_route(&g, &card, DefenseStrategy::Shortest, 0).unwrap();
            let tour = run_tour(&g, &route, &card, &plan.edges, DEFAULT_AMBUSH_DELAY).unwrap();
            assert_eq!(tour.late_count(), 3);
        }
    }

    #[test]
    fn spec_text() {
        let s: FleetSpec = "couriers=3 stops=1 window=90.5 home=a".parse().unwrap();
        assert_eq!(s.to_string(), "couriers=3 stops=1 window=90.5 home=a");
        assert_eq!(s.to_string().parse::<FleetSpec>().unwrap(), s);
        assert!("couriers=3 stops=1".parse::<FleetSpec>().is_err());
        assert!("couriers=3 stops=1 window=2 speed=4".parse::<FleetSpec>().is_err());
        let g = generate_city(&CitySpec::grid(2, 2), 0).unwrap();
        assert!(generate_fleet(&g, &"couriers=1 stops=1 window=5 home=z".parse().unwrap(), 0).is_err());
        assert!(generate_fleet(&g, &"couriers=1 stops=1 window=0".parse().unwrap(), 0).is_err());
    }
}

//! Tour execution against an attack plan, and round-level aggregation.

use std::io::Write;

use rayon::prelude::*;

use crate::attack::{select_attack_edges, AttackPlan, AttackStrategy};
use crate::defense::{DefenseStrategy, RoutePlan, Router};
use crate::graph::{EdgeSet, NodeIx, RoadNetwork};
use crate::{Error, Result};

/// Default ambush delay in seconds.
pub const DEFAULT_AMBUSH_DELAY: f64 = 600.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Stop {
    pub node_id: String,
    pub window_start: f64,
    pub window_end: f64,
}

impl Stop {
    pub fn window(&self) -> f64 {
        self.window_end - self.window_start
    }
}

/// One courier's day: warehouse → stops in order → warehouse.
#[derive(Clone, Debug, PartialEq)]
pub struct JobCard {
    pub courier_id: String,
    pub warehouse: String,
    pub stops: Vec<Stop>,
    pub day_start: f64,
}

impl JobCard {
    pub fn validate(&self) -> Result<()> {
        if self.stops.is_empty() {
            return Err(Error::Validation(format!("courier {} has no stops", self.courier_id)));
        }
        if !self.day_start.is_finite() {
            return Err(Error::Validation(format!("courier {}: day start is not finite", self.courier_id)));
        }
        for (i, s) in self.stops.iter().enumerate() {
            if !(s.window_start.is_finite() && s.window_end.is_finite() && s.window_start < s.window_end) {
                return Err(Error::Validation(format!(
                    "courier {} stop {}: window [{}, {}] is empty",
                    self.courier_id,
                    i + 1,
                    s.window_start,
                    s.window_end
                )));
            }
        }
        Ok(())
    }

    /// Warehouse, every stop, warehouse again, resolved against `net`.
    pub fn waypoints(&self, net: &RoadNetwork) -> Result<Vec<NodeIx>> {
        let home = net.require_node(&self.warehouse)?;
        let mut out = Vec::with_capacity(self.stops.len() + 2);
        out.push(home);
        for s in &self.stops {
            out.push(net.require_node(&s.node_id)?);
        }
        out.push(home);
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopStatus {
    OnTime,
    Late,
    CriticallyLate,
}

impl StopStatus {
    pub fn is_late(self) -> bool {
        self != StopStatus::OnTime
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TourResult {
    pub courier_id: String,
    /// Service time at each stop (after any wait for the window to open);
    /// `None` when the route was abandoned before reaching the stop.
    pub arrivals: Vec<Option<f64>>,
    pub statuses: Vec<StopStatus>,
    pub ambush_count: usize,
    /// Return to the warehouse (or abandonment) minus day start.
    pub tour_time: f64,
    pub completed: bool,
}

impl TourResult {
    pub fn late_count(&self) -> usize {
        self.statuses.iter().filter(|s| s.is_late()).count()
    }

    pub fn critical_count(&self) -> usize {
        self.statuses.iter().filter(|&&s| s == StopStatus::CriticallyLate).count()
    }
}

pub fn classify(arrival: f64, stop: &Stop) -> StopStatus {
    if arrival <= stop.window_end {
        StopStatus::OnTime
    } else if arrival - stop.window_end > 0.5 * stop.window() {
        StopStatus::CriticallyLate
    } else {
        StopStatus::Late
    }
}

/// Drives `plan` for `card`. Every traversal of an attacked edge costs
/// `ambush_delay` on top of the edge's travel time.
pub fn run_tour(
    net: &RoadNetwork,
    plan: &RoutePlan,
    card: &JobCard,
    attacked: &EdgeSet,
    ambush_delay: f64,
) -> Result<TourResult> {
    if !(ambush_delay > 0.0 && ambush_delay.is_finite()) {
        return Err(Error::Domain(format!("ambush delay must be positive, got {ambush_delay}")));
    }
    card.validate()?;
    plan.check_against(net, card)?;
    let mask = attacked.mask(net.edge_count());
    let n_stops = card.stops.len();
    let mut arrivals = vec![None; n_stops];
    let mut statuses = vec![StopStatus::CriticallyLate; n_stops];
    let mut ambush_count = 0;
    let mut t = card.day_start;
    for (i, leg) in plan.legs.iter().enumerate() {
        for &e in &leg.edges {
            t += net.edge(e).travel_time();
            if mask[e.0] {
                t += ambush_delay;
                ambush_count += 1;
            }
        }
        if plan.failed_leg == Some(i) {
            break;
        }
        if let Some(stop) = card.stops.get(i) {
            t = t.max(stop.window_start);
            arrivals[i] = Some(t);
            statuses[i] = classify(t, stop);
        }
    }
    Ok(TourResult {
        courier_id: card.courier_id.clone(),
        arrivals,
        statuses,
        ambush_count,
        tour_time: t - card.day_start,
        completed: plan.failed_leg.is_none(),
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundMetrics {
    pub late_fraction: f64,
    pub critical_fraction_of_late: f64,
    pub mean_tour_time: f64,
    pub p95_tour_time: f64,
    pub total_deliveries: usize,
    pub total_late: usize,
    pub total_critical: usize,
    pub total_ambushes: usize,
}

impl RoundMetrics {
    pub fn from_tours(tours: &[TourResult]) -> Self {
        let total_deliveries: usize = tours.iter().map(|t| t.statuses.len()).sum();
        let total_late: usize = tours.iter().map(TourResult::late_count).sum();
        let total_critical: usize = tours.iter().map(TourResult::critical_count).sum();
        let total_ambushes = tours.iter().map(|t| t.ambush_count).sum();
        let mut times: Vec<f64> = tours.iter().map(|t| t.tour_time).collect();
        times.sort_by(f64::total_cmp);
        let mean_tour_time = if times.is_empty() {
            0.0
        } else {
            times.iter().sum::<f64>() / times.len() as f64
        };
        RoundMetrics {
            late_fraction: ratio(total_late, total_deliveries),
            critical_fraction_of_late: ratio(total_critical, total_late),
            mean_tour_time,
            p95_tour_time: nearest_rank(&times, 0.95),
            total_deliveries,
            total_late,
            total_critical,
            total_ambushes,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Nearest-rank percentile of sorted data; 0 for no data.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Metrics plus the per-courier tours they were computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub metrics: RoundMetrics,
    pub tours: Vec<TourResult>,
}

/// One round: the attack phase builds a plan of `k` edges, the defense
/// phase routes every courier, then all tours are driven. `seed`
/// identifies the round.
pub fn run_round(
    net: &RoadNetwork,
    fleet: &[JobCard],
    attack: AttackStrategy,
    defense: DefenseStrategy,
    k: usize,
    ambush_delay: f64,
    seed: u64,
) -> Result<Round> {
    let plan = select_attack_edges(net, attack, k, seed)?;
    run_round_with(net, &Router::new(net), fleet, &plan, defense, ambush_delay, seed)
}

/// As [`run_round`] with a prebuilt attack plan and router.
pub fn run_round_with(
    net: &RoadNetwork,
    router: &Router<'_>,
    fleet: &[JobCard],
    plan: &AttackPlan,
    defense: DefenseStrategy,
    ambush_delay: f64,
    seed: u64,
) -> Result<Round> {
    if fleet.is_empty() {
        return Err(Error::Domain("a round needs at least one job card".into()));
    }
    let tours = fleet
        .par_iter()
        .map(|card| {
            let route = router.plan_route(card, defense, seed)?;
            run_tour(net, &route, card, &plan.edges, ambush_delay)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Round {
        metrics: RoundMetrics::from_tours(&tours),
        tours,
    })
}

/// Stretches every window to `window_start + multiplier·(window_end − window_start)`.
pub fn apply_window_multiplier(fleet: &[JobCard], multiplier: f64) -> Result<Vec<JobCard>> {
    if !(multiplier >= 1.0 && multiplier.is_finite()) {
        return Err(Error::Domain(format!("window multiplier must be ≥ 1, got {multiplier}")));
    }
    if multiplier == 1.0 {
        return Ok(fleet.to_vec());
    }
    Ok(fleet
        .iter()
        .map(|card| JobCard {
            stops: card
                .stops
                .iter()
                .map(|s| Stop {
                    window_end: s.window_start + multiplier * s.window(),
                    ..s.clone()
                })
                .collect(),
            ..card.clone()
        })
        .collect())
}

pub const METRICS_HEADER: &str =
    "attack,defense,k,M,window_mult,late_frac,crit_frac_of_late,mean_tour_s,p95_tour_s,ambushes";

/// One line of the round-metrics table.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub attack: String,
    pub defense: String,
    pub k: usize,
    pub ambush_delay: f64,
    pub window_mult: f64,
    pub metrics: RoundMetrics,
}

pub fn write_metrics_row(w: &mut impl Write, row: &MetricsRow) -> std::io::Result<()> {
    let m = &row.metrics;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{}",
        row.attack,
        row.defense,
        row.k,
        row.ambush_delay,
        row.window_mult,
        m.late_fraction,
        m.critical_fraction_of_late,
        m.mean_tour_time,
        m.p95_tour_time,
        m.total_ambushes
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::fixtures::*;
    use crate::graph::{EdgeIx, EdgeRecord, NodeRecord, Path};
    use proptest::prelude::*;

    fn stop(node: usize, start: f64, end: f64) -> Stop {
        Stop {
            node_id: format!("v{node:03}"),
            window_start: start,
            window_end: end,
        }
    }

    fn card(stops: Vec<Stop>) -> JobCard {
        JobCard {
            courier_id: "c1".into(),
            warehouse: "v000".into(),
            stops,
            day_start: 0.0,
        }
    }

    fn line(times: &[f64]) -> RoadNetwork {
        let n = times.len() + 1;
        RoadNetwork::from_records(
            (0..n).map(|i| NodeRecord { id: format!("v{i:03}"), x: 0.0, y: 0.0 }).collect(),
            times
                .iter()
                .enumerate()
                .map(|(i, &t)| EdgeRecord {
                    id: format!("e{i:03}"),
                    u: format!("v{i:03}"),
                    v: format!("v{:03}", i + 1),
                    length: t,
                    speed: 1.0,
                })
                .collect(),
        )
        .unwrap()
    }

    fn shortest(net: &RoadNetwork, c: &JobCard) -> RoutePlan {
        Router::new(net).plan_route(c, DefenseStrategy::Shortest, 0).unwrap()
    }

    #[test]
    fn clean_route_is_on_time() {
        let g = line(&[100.0, 100.0]);
        let c = card(vec![stop(2, 0.0, 1000.0)]);
        let r = run_tour(&g, &shortest(&g, &c), &c, &EdgeSet::empty(), 600.0).unwrap();
        assert_eq!(r.statuses, [StopStatus::OnTime]);
        assert_eq!(r.arrivals, [Some(200.0)]);
        assert_eq!(r.ambush_count, 0);
        assert_eq!(r.tour_time, 400.0);
    }

    #[test]
    fn single_ambush_is_critically_late() {
        // 300 s leg, M = 600 s, an 800 s window closing 400 s after
        // departure: arrival at 900 s is 500 s late, over half the window.
        let g = line(&[300.0]);
        let c = card(vec![stop(1, -400.0, 400.0)]);
        let attacked = EdgeSet::new(&g, [EdgeIx(0)]).unwrap();
        let r = run_tour(&g, &shortest(&g, &c), &c, &attacked, 600.0).unwrap();
        assert_eq!(r.arrivals, [Some(900.0)]);
        assert_eq!(r.statuses, [StopStatus::CriticallyLate]);
    }

    #[test]
    fn lateness_threshold() {
        let s = stop(0, 0.0, 100.0);
        assert_eq!(classify(100.0, &s), StopStatus::OnTime);
        assert_eq!(classify(150.0, &s), StopStatus::Late);
        assert_eq!(classify(150.5, &s), StopStatus::CriticallyLate);
    }

    #[test]
    fn early_courier_waits() {
        let g = line(&[10.0]);
        let c = card(vec![stop(1, 50.0, 60.0)]);
        let r = run_tour(&g, &shortest(&g, &c), &c, &EdgeSet::empty(), 600.0).unwrap();
        assert_eq!(r.arrivals, [Some(50.0)]);
        assert_eq!(r.tour_time, 60.0);
    }

    #[test]
    fn repeated_crossing_is_ambushed_twice() {
        // the out and back legs both take the cheap edge (0,1)
        let g = build_weighted(3, &[(0, 1, 5.0), (1, 2, 1.0), (0, 2, 10.0)]);
        let c = card(vec![stop(1, 0.0, 10_000.0)]);
        let attacked = EdgeSet::new(&g, [EdgeIx(0)]).unwrap();
        let plan = shortest(&g, &c);
        let clean = run_tour(&g, &plan, &c, &EdgeSet::empty(), 600.0).unwrap();
        let hit = run_tour(&g, &plan, &c, &attacked, 600.0).unwrap();
        assert_eq!(hit.ambush_count, 2);
        assert_eq!(hit.tour_time - clean.tour_time, 1200.0);
    }

    #[test]
    fn failed_route_marks_the_rest_critical() {
        let g = line(&[10.0, 10.0]);
        let c = card(vec![stop(1, 0.0, 100.0), stop(2, 0.0, 100.0)]);
        let home = g.node_ix("v000").unwrap();
        let one = g.node_ix("v001").unwrap();
        let plan = RoutePlan {
            strategy: DefenseStrategy::RandomWalk,
            legs: vec![
                Path { nodes: vec![home, one], edges: vec![EdgeIx(0)], weight: 10.0 },
                Path { nodes: vec![one, home], edges: vec![EdgeIx(0)], weight: 10.0 },
            ],
            seed: 0,
            failed_leg: Some(1),
        };
        let r = run_tour(&g, &plan, &c, &EdgeSet::empty(), 600.0).unwrap();
        assert_eq!(r.arrivals, [Some(10.0), None]);
        assert_eq!(r.statuses, [StopStatus::OnTime, StopStatus::CriticallyLate]);
        assert!(!r.completed);
        assert_eq!(r.tour_time, 20.0);
    }

    #[test]
    fn mismatched_route_is_rejected() {
        let g = line(&[10.0, 10.0]);
        let c = card(vec![stop(1, 0.0, 100.0)]);
        let other = card(vec![stop(2, 0.0, 100.0)]);
        assert!(run_tour(&g, &shortest(&g, &other), &c, &EdgeSet::empty(), 600.0).is_err());
        assert!(run_tour(&g, &shortest(&g, &c), &c, &EdgeSet::empty(), 0.0).is_err());
    }

    #[test]
    fn metrics_aggregate() {
        let t = |late: usize, crit: usize, time: f64| TourResult {
            courier_id: String::new(),
            arrivals: vec![],
            statuses: (0..4)
                .map(|i| {
                    if i < crit {
                        StopStatus::CriticallyLate
                    } else if i < late {
                        StopStatus::Late
                    } else {
                        StopStatus::OnTime
                    }
                })
                .collect(),
            ambush_count: late,
            tour_time: time,
            completed: true,
        };
        let m = RoundMetrics::from_tours(&[t(2, 1, 10.0), t(0, 0, 30.0)]);
        assert_eq!(m.late_fraction, 0.25);
        assert_eq!(m.critical_fraction_of_late, 0.5);
        assert_eq!(m.mean_tour_time, 20.0);
        assert_eq!(m.p95_tour_time, 30.0);
        assert_eq!(m.total_ambushes, 2);
        assert_eq!(nearest_rank(&(1..=20).map(f64::from).collect::<Vec<_>>(), 0.95), 19.0);
    }

    #[test]
    fn window_multiplier() {
        let c = card(vec![stop(1, 100.0, 200.0)]);
        assert_eq!(apply_window_multiplier(&[c.clone()], 1.0).unwrap(), [c.clone()]);
        let w = apply_window_multiplier(&[c.clone()], 2.5).unwrap();
        assert_eq!((w[0].stops[0].window_start, w[0].stops[0].window_end), (100.0, 350.0));
        assert!(apply_window_multiplier(&[c], 0.9).is_err());
        // a 2.2 h window stretched by 3.5 adds 5.5 h of slack
        let long = card(vec![stop(1, 0.0, 7_920.0)]);
        let w = apply_window_multiplier(&[long], 3.5).unwrap();
        assert_eq!(w[0].stops[0].window_end, 27_720.0);
        assert_eq!(w[0].stops[0].window_end - 7_920.0, 5.5 * 3600.0);
    }

    #[test]
    fn only_bridge_attacked_makes_everything_late() {
        let g = bridged_cliques(4);
        let bridge = g.edge_indices().last().unwrap();
        let fleet: Vec<JobCard> = (4..8)
            .map(|i| JobCard {
                courier_id: format!("c{i}"),
                ..card(vec![stop(i, 0.0, 100.0)])
            })
            .collect();
        let plan = AttackPlan {
            strategy: AttackStrategy::Betweenness,
            edges: EdgeSet::new(&g, [bridge]).unwrap(),
            seed: 0,
        };
        let round = run_round_with(&g, &Router::new(&g), &fleet, &plan, DefenseStrategy::Shortest, 600.0, 1).unwrap();
        assert_eq!(round.metrics.late_fraction, 1.0);
    }

    proptest! {
        #[test]
        fn delay_is_exactly_m_per_ambush(seed in 0u64..200, picks in proptest::collection::vec(0usize..40, 1..6)) {
            let g = random_connected(12, 10, seed);
            let attacked = EdgeSet::new(&g, picks.iter().map(|&p| EdgeIx(p % g.edge_count())).collect::<std::collections::BTreeSet<_>>()).unwrap();
            let c = JobCard {
                stops: (1..4).map(|i| stop((seed as usize + 3 * i) % 12, 0.0, 1e9)).collect(),
                ..card(vec![])
            };
            for d in [DefenseStrategy::Shortest, DefenseStrategy::Mixnet] {
                let plan = Router::new(&g).plan_route(&c, d, seed).unwrap();
                let clean = run_tour(&g, &plan, &c, &EdgeSet::empty(), 600.0).unwrap();
                let hit = run_tour(&g, &plan, &c, &attacked, 600.0).unwrap();
                prop_assert_eq!(hit.tour_time - clean.tour_time, 600.0 * hit.ambush_count as f64);
            }
        }

        #[test]
        fn wider_windows_never_add_lateness(seed in 0u64..100, mult in 1.0f64..4.0) {
            let g = random_connected(10, 8, seed);
            let fleet: Vec<JobCard> = (0..3).map(|j| JobCard {
                courier_id: format!("c{j}"),
                stops: (1..4).map(|i| stop((j + 2 * i) % 10, 10.0 * i as f64, 10.0 * i as f64 + 2.0)).collect(),
                ..card(vec![])
            }).collect();
            let plan = select_attack_edges(&g, AttackStrategy::Random, 3, seed).unwrap();
            let router = Router::new(&g);
            let base = run_round_with(&g, &router, &fleet, &plan, DefenseStrategy::Mixnet, 600.0, seed).unwrap();
            let wide = apply_window_multiplier(&fleet, mult).unwrap();
            let after = run_round_with(&g, &router, &wide, &plan, DefenseStrategy::Mixnet, 600.0, seed).unwrap();
            prop_assert!(after.metrics.late_fraction <= base.metrics.late_fraction);
        }

        #[test]
        fn larger_attack_sets_never_help(seed in 0u64..100, k in 1usize..6) {
            let g = random_connected(10, 8, seed);
            let fleet = vec![JobCard { stops: (1..5).map(|i| stop((3 * i) % 10, 0.0, 50.0)).collect(), ..card(vec![]) }];
            let ranking = crate::attack::rank_edges(&g, AttackStrategy::Random, seed).unwrap();
            let router = Router::new(&g);
            let small = run_round_with(&g, &router, &fleet, &ranking.plan(&g, k).unwrap(), DefenseStrategy::Shortest, 600.0, seed).unwrap();
            let big = run_round_with(&g, &router, &fleet, &ranking.plan(&g, k + 1).unwrap(), DefenseStrategy::Shortest, 600.0, seed).unwrap();
            prop_assert!(big.tours[0].tour_time >= small.tours[0].tour_time);
            prop_assert!(big.metrics.total_late >= small.metrics.total_late);
        }
    }
}

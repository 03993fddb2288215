//! `interdict`: run interdiction experiments on road networks.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use interdict_core::analysis::{centrality, modularity, partition_cutset, write_partition, CentralityKind};
use interdict_core::attack::{read_plan, strategy_partition, write_plan, AttackStrategy, Planner};
use interdict_core::defense::{read_routes, write_routes, DefenseStrategy, RoutePlan, Router};
use interdict_core::graph::{load_network, write_edges, write_nodes};
use interdict_core::harness::{
    emit_reports, load_inputs, run_matrix, run_sweep, ExperimentConfig, FleetSource, NetworkSource, Results,
    SweepAxis, CONFIG_KEYS,
};
use interdict_core::sim::{
    apply_window_multiplier, run_tour, write_metrics_row, JobCard, MetricsRow, RoundMetrics, METRICS_HEADER,
};
use interdict_core::synth::{
    generate_city, generate_fleet, parse_jobcards, synthesize_traces, write_audit, write_jobcards, CitySpec,
    FleetSpec, TraceTolerance,
};
use interdict_core::{Error, Result, RoadNetwork};

#[derive(Parser)]
#[command(name = "interdict", version, about = "Interdiction games on road networks", after_help = CONFIG_KEYS)]
struct Cli {
    /// Experiment config file (flat `key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for rankings, generators and default round seeds
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grow attack plans by superset as k increases
    #[arg(long, global = true)]
    nested_plans: bool,
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct NetArgs {
    /// Nodes file `node_id,x,y`
    #[arg(long, requires = "edges")]
    nodes: Option<PathBuf>,
    /// Edges file `edge_id,u,v,length_m,speed_mps`
    #[arg(long, requires = "nodes")]
    edges: Option<PathBuf>,
    /// Generated network, e.g. "grid rows=5 cols=5"
    #[arg(long, conflicts_with = "nodes")]
    city: Option<String>,
}

#[derive(Args, Clone, Default)]
struct CardArgs {
    /// Job-card file
    #[arg(long)]
    jobcards: Option<PathBuf>,
    /// Generated cards, e.g. "couriers=20 stops=2 window=300"
    #[arg(long, conflicts_with = "jobcards")]
    fleet: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Play one round and write per-tour results
    Simulate {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        cards: CardArgs,
        #[arg(long, default_value = "betweenness", conflicts_with = "attack_plan")]
        attack: AttackStrategy,
        /// Replay an attack plan file (`edge_id`) instead of planning
        #[arg(long)]
        attack_plan: Option<PathBuf>,
        #[arg(long, default_value = "shortest", conflicts_with = "routes")]
        defense: DefenseStrategy,
        /// Replay a route file (`courier_id,leg_index,edge_id,order`)
        #[arg(long)]
        routes: Option<PathBuf>,
        /// Attacker count (default from config, else 30)
        #[arg(long)]
        k: Option<usize>,
        /// Ambush delay in seconds (default from config, else 600)
        #[arg(long = "M")]
        ambush_delay: Option<f64>,
        /// Round seed (default: the base seed)
        #[arg(long)]
        round: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        window_mult: f64,
    },
    /// Every attack against every defense, with equilibria
    Matrix {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        cards: CardArgs,
    },
    /// Sweep window size or attacker count
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        cards: CardArgs,
    },
    /// Write one attack plan
    Attack {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        strategy: AttackStrategy,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        round: Option<u64>,
    },
    /// Centrality scores and community partitions
    Analyze {
        #[command(flatten)]
        net: NetArgs,
        /// degree, betweenness or eigenvector
        #[arg(long)]
        centrality: Option<CentralityKind>,
        /// A partition-based attack strategy name
        #[arg(long)]
        partition: Option<AttackStrategy>,
    },
    /// Move job cards onto another network, keeping leg travel times
    Synth {
        #[arg(long)]
        base_cards: PathBuf,
        #[arg(long)]
        base_nodes: PathBuf,
        #[arg(long)]
        base_edges: PathBuf,
        /// Target network
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value_t = 0.10)]
        tolerance: f64,
        #[arg(long)]
        max_candidates: Option<usize>,
    },
    /// Generate a network (and optionally job cards) as files
    GenCity {
        /// e.g. "two_cluster a=16 b=16 bridges=2"
        #[arg(long)]
        city: CitySpec,
        #[arg(long)]
        fleet: Option<FleetSpec>,
    },
}

struct Ctx {
    config: Option<ExperimentConfig>,
    seed: u64,
    out: PathBuf,
    nested: bool,
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
    }
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let config = cli.config.as_ref().map(ExperimentConfig::load).transpose()?;
        let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
        let out = cli
            .out
            .clone()
            .or_else(|| config.as_ref().map(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"));
        let nested = cli.nested_plans || config.as_ref().is_some_and(|c| c.nested_plans);
        Ok(Ctx { config, seed, out, nested })
    }

    fn network_source(&self, args: &NetArgs) -> Result<NetworkSource> {
        match (&args.nodes, &args.edges, &args.city) {
            (Some(n), Some(e), _) => Ok(NetworkSource::Files { nodes: absolute(n), edges: absolute(e) }),
            (_, _, Some(c)) => Ok(NetworkSource::City(c.parse()?)),
            _ => self
                .config
                .as_ref()
                .map(|c| c.network.clone())
                .ok_or_else(|| Error::Validation("no network: pass --nodes/--edges, --city or --config".into())),
        }
    }

    fn fleet_source(&self, args: &CardArgs) -> Result<FleetSource> {
        match (&args.jobcards, &args.fleet) {
            (Some(p), _) => Ok(FleetSource::File(absolute(p))),
            (_, Some(f)) => Ok(FleetSource::Generated(f.parse()?)),
            _ => self
                .config
                .as_ref()
                .map(|c| c.fleet.clone())
                .ok_or_else(|| Error::Validation("no job cards: pass --jobcards, --fleet or --config".into())),
        }
    }

    /// The config file with command-line inputs and flags applied.
    fn experiment(&self, net: &NetArgs, cards: &CardArgs) -> Result<ExperimentConfig> {
        let network = self.network_source(net)?;
        let fleet = self.fleet_source(cards)?;
        let mut cfg = match &self.config {
            Some(c) => ExperimentConfig { network, fleet, ..c.clone() },
            None => ExperimentConfig::new(network, fleet),
        };
        cfg.set_seed(self.seed);
        cfg.nested_plans = self.nested;
        cfg.output_dir = self.out.clone();
        cfg.validate()?;
        Ok(cfg)
    }

    fn network(&self, args: &NetArgs) -> Result<RoadNetwork> {
        let base = self.config.as_ref().map(|c| c.base_dir.clone()).unwrap_or_default();
        match self.network_source(args)? {
            NetworkSource::Files { nodes, edges } => load_network(base.join(nodes), base.join(edges)),
            NetworkSource::City(spec) => generate_city(&spec, self.seed),
        }
    }

    fn create(&self, name: &str) -> Result<(BufWriter<File>, PathBuf)> {
        std::fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))?;
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| io_error(&path, e))?;
        Ok((BufWriter::new(f), path))
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf> {
        let (mut w, path) = self.create(name)?;
        body(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

const TOURS_HEADER: &str = "courier_id,tour_s,ambushes,late,critical,completed";

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(&cli)?;
    match cli.command {
        Command::Simulate { net, cards, attack, attack_plan, defense, routes, k, ambush_delay, round, window_mult } => {
            let cfg = ctx.experiment(&net, &cards)?;
            let inputs = load_inputs(&cfg)?;
            let fleet = apply_window_multiplier(&inputs.fleet, window_mult)?;
            let net = &inputs.net;
            let k = k.unwrap_or(cfg.k);
            let delay = ambush_delay.unwrap_or(cfg.ambush_delay);
            let round = round.unwrap_or(ctx.seed);
            let (attack_label, edges) = match &attack_plan {
                Some(p) => {
                    let f = File::open(p).map_err(|e| io_error(p, e))?;
                    ("replay".to_string(), read_plan(net, f, &p.display().to_string())?)
                }
                None => {
                    let plan = Planner::new(net, ctx.seed, ctx.nested).plan(attack, k, round)?;
                    (attack.to_string(), plan.edges)
                }
            };
            let plans = plan_routes(net, &fleet, defense, routes.as_deref(), round)?;
            let tours = fleet
                .par_iter()
                .zip(&plans)
                .map(|(card, plan)| run_tour(net, plan, card, &edges, delay))
                .collect::<Result<Vec<_>>>()?;
            let metrics = RoundMetrics::from_tours(&tours);
            let row = MetricsRow {
                attack: attack_label,
                defense: if routes.is_some() { "replay".into() } else { defense.to_string() },
                k: edges.len(),
                ambush_delay: delay,
                window_mult,
                metrics: metrics.clone(),
            };
            ctx.write("round_metrics.csv", |w| {
                writeln!(w, "{METRICS_HEADER}")?;
                write_metrics_row(w, &row)
            })?;
            ctx.write("tours.csv", |w| {
                writeln!(w, "{TOURS_HEADER}")?;
                for t in &tours {
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        t.courier_id,
                        t.tour_time,
                        t.ambush_count,
                        t.late_count(),
                        t.critical_count(),
                        t.completed
                    )?;
                }
                Ok(())
            })?;
            ctx.write("routes.csv", |w| {
                write_routes(net, fleet.iter().map(|c| c.courier_id.as_str()).zip(&plans), w)
            })?;
            ctx.write("attack_plan.csv", |w| write_plan(net, &edges, w))?;
            println!(
                "late {}/{} ({:.4}), critical {}, ambushes {}, mean tour {:.1} s",
                metrics.total_late,
                metrics.total_deliveries,
                metrics.late_fraction,
                metrics.total_critical,
                metrics.total_ambushes,
                metrics.mean_tour_time
            );
        }
        Command::Matrix { net, cards } => {
            let cfg = ctx.experiment(&net, &cards)?;
            let inputs = load_inputs(&cfg)?;
            let report = run_matrix(&cfg, &inputs)?;
            let pure = report.pure.len();
            let value = report.equilibria.last().map(|e| e.value);
            emit_reports(&cfg, &inputs, &Results { matrix: Some(report), ..Default::default() }, &cfg.output_dir)?;
            println!("{} pure equilibria, game value {:?}", pure, value.unwrap_or(f64::NAN));
        }
        Command::Sweep { axis, net, cards } => {
            let cfg = ctx.experiment(&net, &cards)?;
            let inputs = load_inputs(&cfg)?;
            let table = run_sweep(&cfg, &inputs, axis)?;
            let rows = table.rows.len();
            let results = match axis {
                SweepAxis::Window => Results { window: Some(table), ..Default::default() },
                SweepAxis::Attackers => Results { attackers: Some(table), ..Default::default() },
            };
            emit_reports(&cfg, &inputs, &results, &cfg.output_dir)?;
            println!("{rows} {} sweep rows", axis.name());
        }
        Command::Attack { net, strategy, k, round } => {
            let net = ctx.network(&net)?;
            let k = k.or(ctx.config.as_ref().map(|c| c.k)).unwrap_or(interdict_core::harness::DEFAULT_K);
            let plan = Planner::new(&net, ctx.seed, ctx.nested).plan(strategy, k, round.unwrap_or(ctx.seed))?;
            ctx.write("attack_plan.csv", |w| write_plan(&net, &plan.edges, w))?;
            println!("{}", plan.edges.ids(&net).collect::<Vec<_>>().join(","));
        }
        Command::Analyze { net, centrality: kind, partition } => {
            if kind.is_none() && partition.is_none() {
                return Err(Error::Validation("analyze needs --centrality and/or --partition".into()));
            }
            let net = ctx.network(&net)?;
            let mut summary = String::new();
            if let Some(kind) = kind {
                let scores = centrality::<f64>(&net, kind)?;
                ctx.write("node_centrality.csv", |w| {
                    writeln!(w, "node_id,score")?;
                    for n in net.node_indices() {
                        writeln!(w, "{},{}", net.node(n).id, scores.node_scores[n.0])?;
                    }
                    Ok(())
                })?;
                ctx.write("edge_centrality.csv", |w| {
                    writeln!(w, "edge_id,score")?;
                    for e in net.edge_indices() {
                        writeln!(w, "{},{}", net.edge(e).id, scores.edge_scores[e.0])?;
                    }
                    Ok(())
                })?;
                summary += &format!("centrality = {kind}\n");
                if let Some(l) = scores.eigenvalue {
                    summary += &format!("eigenvalue = {l}\n");
                }
            }
            if let Some(strategy) = partition {
                if !strategy.is_partition_based() {
                    return Err(Error::Validation(format!("{strategy} is not a partition-based strategy")));
                }
                let part = strategy_partition(&net, strategy, ctx.seed)?;
                ctx.write("partition.csv", |w| write_partition(&net, &part, w))?;
                summary += &format!(
                    "partition = {strategy}\ncommunities = {}\nmodularity = {}\ncut_edges = {}\n",
                    part.num_communities(),
                    modularity::<f64>(&net, &part)?,
                    partition_cutset(&net, &part)?.ids(&net).collect::<Vec<_>>().join(",")
                );
            }
            ctx.write("analysis.txt", |w| w.write_all(summary.as_bytes()))?;
            print!("{summary}");
        }
        Command::Synth { base_cards, base_nodes, base_edges, net, tolerance, max_candidates } => {
            let base_net = load_network(&base_nodes, &base_edges)?;
            let base = parse_jobcards(&base_cards)?;
            let target = ctx.network(&net)?;
            let tol = TraceTolerance::new(tolerance, max_candidates)?;
            let out = synthesize_traces(&base, &base_net, &target, tol, ctx.seed)?;
            ctx.write("jobcards.csv", |w| write_jobcards(&out.cards, w))?;
            ctx.write("jobcards_audit.csv", |w| write_audit(&out.audit, w))?;
            let widened = out.audit.iter().filter(|a| a.tolerance_used > tolerance).count();
            println!("{} cards, {} legs, {widened} widened", out.cards.len(), out.audit.len());
        }
        Command::GenCity { city, fleet } => {
            let net = generate_city(&city, ctx.seed)?;
            ctx.write("nodes.csv", |w| write_nodes(&net, w))?;
            ctx.write("edges.csv", |w| write_edges(&net, w))?;
            if let Some(spec) = fleet {
                let cards = generate_fleet(&net, &spec, ctx.seed)?;
                ctx.write("jobcards.csv", |w| write_jobcards(&cards, w))?;
            }
            println!("{} nodes, {} edges", net.node_count(), net.edge_count());
        }
    }
    Ok(())
}

/// Plans every courier's route, or reads them back from a route file.
fn plan_routes(
    net: &RoadNetwork,
    fleet: &[JobCard],
    defense: DefenseStrategy,
    routes: Option<&Path>,
    round: u64,
) -> Result<Vec<RoutePlan>> {
    match routes {
        Some(p) => {
            let f = File::open(p).map_err(|e| io_error(p, e))?;
            let mut table = read_routes(net, f, &p.display().to_string())?;
            fleet
                .iter()
                .map(|card| {
                    let legs = table
                        .remove(&card.courier_id)
                        .ok_or_else(|| Error::Validation(format!("route file has no courier {}", card.courier_id)))?;
                    RoutePlan::from_edges(net, card, defense, legs)
                })
                .collect()
        }
        None => {
            let router = Router::new(net);
            fleet.par_iter().map(|card| router.plan_route(card, defense, round)).collect()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let pool = match cli.workers {
        Some(0) => {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start workers: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use interdict_core::EdgeSet;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn empty_plan_is_accepted() {
        let net = generate_city(&CitySpec::grid(2, 2), 0).unwrap();
        assert!(read_plan(&net, "edge_id\n".as_bytes(), "p").unwrap().is_empty());
        assert_eq!(EdgeSet::empty().len(), 0);
    }
}

//! Config-driven experiment runs: the payoff matrix with its equilibria,
//! window and attacker-count sweeps, and the report files.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use config::{
    default_window_multipliers, ExperimentConfig, FleetSource, NetworkSource, CONFIG_KEYS, DEFAULT_ATTACKER_COUNTS,
    DEFAULT_K, DEFAULT_SEED_COUNT,
};

use crate::attack::{AttackStrategy, Planner};
use crate::defense::{DefenseStrategy, Router};
use crate::game::{
    find_pure_nash, payoff_from_cells, pure_equilibrium, simulate_cells, solve_zero_sum, write_equilibria,
    write_payoff_matrix, CellRounds, Equilibrium, GameSetup, PayoffMatrix,
};
use crate::graph::{load_network, write_edges, write_nodes, RoadNetwork};
use crate::sim::{apply_window_multiplier, run_round_with, write_metrics_row, JobCard, MetricsRow};
use crate::synth::{generate_city, generate_fleet, parse_jobcards, write_jobcards};
use crate::{Error, Result};

/// The network and fleet a config points at, with content digests.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub net: RoadNetwork,
    pub fleet: Vec<JobCard>,
    pub network_sha256: String,
    pub jobcards_sha256: String,
}

/// Loads or generates the inputs. Digests cover the normalized file
/// rendering, so a generated city and the same city read from disk agree.
pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    let net = match &cfg.network {
        NetworkSource::Files { nodes, edges } => load_network(cfg.resolve(nodes), cfg.resolve(edges))?,
        NetworkSource::City(spec) => generate_city(spec, cfg.seed)?,
    };
    let fleet = match &cfg.fleet {
        FleetSource::File(p) => parse_jobcards(cfg.resolve(p))?,
        FleetSource::Generated(spec) => generate_fleet(&net, spec, cfg.seed)?,
    };
    for card in &fleet {
        card.waypoints(&net)?;
    }
    let mut text = Vec::new();
    write_nodes(&net, &mut text).and_then(|_| write_edges(&net, &mut text)).expect("in-memory write");
    let network_sha256 = hex::encode(Sha256::digest(&text));
    text.clear();
    write_jobcards(&fleet, &mut text).expect("in-memory write");
    let jobcards_sha256 = hex::encode(Sha256::digest(&text));
    Ok(Inputs { net, fleet, network_sha256, jobcards_sha256 })
}

/// Matrix run output.
#[derive(Clone, Debug)]
pub struct MatrixReport {
    pub k: usize,
    pub ambush_delay: f64,
    pub matrix: PayoffMatrix<f64>,
    pub cells: Vec<CellRounds>,
    /// Saddle points of the mean matrix.
    pub pure: Vec<(usize, usize)>,
    /// Every saddle point, then the linear-programming solution.
    pub equilibria: Vec<Equilibrium<f64>>,
}

/// Plays every attack against every defense for every seed and solves the
/// game on the mean late fractions (attacker maximizes).
pub fn run_matrix(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<MatrixReport> {
    cfg.validate()?;
    let planner = Planner::new(&inputs.net, cfg.seed, cfg.nested_plans);
    let router = Router::new(&inputs.net);
    let setup = GameSetup {
        net: &inputs.net,
        fleet: &inputs.fleet,
        k: cfg.k,
        ambush_delay: cfg.ambush_delay,
        seeds: &cfg.seeds,
    };
    let cells = simulate_cells(setup, &planner, &router, &cfg.attacks, &cfg.defenses)?;
    let matrix = payoff_from_cells(&cfg.attacks, &cfg.defenses, &cfg.seeds, &cells);
    let means = matrix.values();
    let pure = find_pure_nash(&means)?;
    let mut equilibria: Vec<Equilibrium<f64>> = pure.iter().map(|&c| pure_equilibrium(&means, c)).collect();
    equilibria.push(solve_zero_sum(&means, cfg.epsilon)?);
    Ok(MatrixReport {
        k: cfg.k,
        ambush_delay: cfg.ambush_delay,
        matrix,
        cells,
        pure,
        equilibria,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Window,
    Attackers,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Window => "window",
            SweepAxis::Attackers => "attackers",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            SweepAxis::Window => "sweep_window.csv",
            SweepAxis::Attackers => "sweep_attackers.csv",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window" => Ok(SweepAxis::Window),
            "attackers" => Ok(SweepAxis::Attackers),
            _ => Err(Error::Domain(format!("unknown sweep axis `{s}` (window or attackers)"))),
        }
    }
}

/// One round of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub row: MetricsRow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    /// Ordered by axis value, attack, defense, seed.
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_HEADER: &str =
    "seed,attack,defense,k,M,window_mult,late_frac,crit_frac_of_late,mean_tour_s,p95_tour_s,ambushes";

/// Rounds for every (axis value, attack, defense, seed). The window axis
/// stretches windows at the configured k; the attackers axis varies k at
/// the original windows.
pub fn run_sweep(cfg: &ExperimentConfig, inputs: &Inputs, axis: SweepAxis) -> Result<SweepTable> {
    cfg.validate()?;
    let planner = Planner::new(&inputs.net, cfg.seed, cfg.nested_plans);
    let router = Router::new(&inputs.net);
    let points: Vec<(usize, f64)> = match axis {
        SweepAxis::Window => cfg.window_multipliers.iter().map(|&m| (cfg.k, m)).collect(),
        SweepAxis::Attackers => cfg.attacker_counts.iter().map(|&k| (k, 1.0)).collect(),
    };
    let fleets = points
        .iter()
        .map(|&(_, m)| apply_window_multiplier(&inputs.fleet, m))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, AttackStrategy, DefenseStrategy)> = (0..points.len())
        .flat_map(|p| {
            cfg.attacks
                .iter()
                .flat_map(move |&a| cfg.defenses.iter().map(move |&d| (p, a, d)))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(p, attack, defense)| {
            let (k, mult) = points[p];
            cfg.seeds
                .iter()
                .map(|&seed| {
                    let plan = planner.plan(attack, k, seed)?;
                    let round = run_round_with(&inputs.net, &router, &fleets[p], &plan, defense, cfg.ambush_delay, seed)?;
                    Ok(SweepRow {
                        seed,
                        row: MetricsRow {
                            attack: attack.to_string(),
                            defense: defense.to_string(),
                            k,
                            ambush_delay: cfg.ambush_delay,
                            window_mult: mult,
                            metrics: round.metrics,
                        },
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { axis, rows: rows.into_iter().flatten().collect() })
}

/// Whatever a command produced; absent parts write no file.
#[derive(Clone, Debug, Default)]
pub struct Results {
    pub matrix: Option<MatrixReport>,
    pub window: Option<SweepTable>,
    pub attackers: Option<SweepTable>,
}

pub const CRITICAL_HEADER: &str = "attack,defense,late,critical,crit_pct_of_late";

fn create(dir: &Path, name: &str, written: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(BufWriter::new(file))
}

fn finish(w: BufWriter<File>, path: &Path) -> Result<()> {
    w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    Ok(())
}

/// Writes the report files into `dir`, creating it, and returns their
/// paths. `manifest.txt` is always written.
pub fn emit_reports(cfg: &ExperimentConfig, inputs: &Inputs, results: &Results, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e: std::io::Error| Error::io(path.clone(), e)
    };
    if let Some(m) = &results.matrix {
        let mut w = create(dir, "payoff_matrix.csv", &mut written)?;
        let path = written.last().cloned().expect("pushed");
        write_payoff_matrix(&m.matrix, &mut w).map_err(io(&path))?;
        finish(w, &path)?;

        let mut w = create(dir, "equilibria.csv", &mut written)?;
        let path = written.last().cloned().expect("pushed");
        write_equilibria(&m.matrix, &m.equilibria, &mut w).map_err(io(&path))?;
        finish(w, &path)?;

        let mut w = create(dir, "round_metrics.csv", &mut written)?;
        let path = written.last().cloned().expect("pushed");
        (|| -> std::io::Result<()> {
            writeln!(w, "{SWEEP_HEADER}")?;
            for cell in &m.cells {
                for (seed, metrics) in m.matrix.seeds.iter().zip(&cell.rounds) {
                    write!(w, "{seed},")?;
                    write_metrics_row(
                        &mut w,
                        &MetricsRow {
                            attack: cell.attack.to_string(),
                            defense: cell.defense.to_string(),
                            k: m.k,
                            ambush_delay: m.ambush_delay,
                            window_mult: 1.0,
                            metrics: metrics.clone(),
                        },
                    )?;
                }
            }
            Ok(())
        })()
        .map_err(io(&path))?;
        finish(w, &path)?;

        let mut w = create(dir, "critical_delays.csv", &mut written)?;
        let path = written.last().cloned().expect("pushed");
        (|| -> std::io::Result<()> {
            writeln!(w, "{CRITICAL_HEADER}")?;
            for cell in &m.cells {
                let late: usize = cell.rounds.iter().map(|r| r.total_late).sum();
                let critical: usize = cell.rounds.iter().map(|r| r.total_critical).sum();
                let pct = if late == 0 { 0.0 } else { 100.0 * critical as f64 / late as f64 };
                writeln!(w, "{},{},{late},{critical},{pct}", cell.attack, cell.defense)?;
            }
            Ok(())
        })()
        .map_err(io(&path))?;
        finish(w, &path)?;
    }
    for table in [&results.window, &results.attackers].into_iter().flatten() {
        let mut w = create(dir, table.axis.file_name(), &mut written)?;
        let path = written.last().cloned().expect("pushed");
        (|| -> std::io::Result<()> {
            writeln!(w, "{SWEEP_HEADER}")?;
            for r in &table.rows {
                write!(w, "{},", r.seed)?;
                write_metrics_row(&mut w, &r.row)?;
            }
            Ok(())
        })()
        .map_err(io(&path))?;
        finish(w, &path)?;
    }
    let mut files: Vec<String> = written
        .iter()
        .map(|p| p.file_name().expect("file").to_string_lossy().into_owned())
        .collect();
    let mut w = create(dir, "manifest.txt", &mut written)?;
    let path = written.last().cloned().expect("pushed");
    files.sort();
    (|| -> std::io::Result<()> {
        writeln!(w, "config_sha256 = {}", cfg.hash())?;
        writeln!(w, "network_sha256 = {}", inputs.network_sha256)?;
        writeln!(w, "jobcards_sha256 = {}", inputs.jobcards_sha256)?;
        writeln!(w, "files = {}", files.join(","))?;
        write!(w, "{}", cfg.canonical())
    })()
    .map_err(io(&path))?;
    finish(w, &path)?;
    Ok(written)
}

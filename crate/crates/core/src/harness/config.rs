use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::attack::AttackStrategy;
use crate::defense::DefenseStrategy;
use crate::game::DEFAULT_EPSILON;
use crate::sim::DEFAULT_AMBUSH_DELAY;
use crate::synth::{CitySpec, FleetSpec};
use crate::{Error, Result};

/// Where the road network comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum NetworkSource {
    Files { nodes: PathBuf, edges: PathBuf },
    City(CitySpec),
}

/// Where the job cards come from.
#[derive(Clone, Debug, PartialEq)]
pub enum FleetSource {
    File(PathBuf),
    Generated(FleetSpec),
}

/// Every knob of an experiment run.
///
/// `seed` drives the attack rankings, generated cities and fleets; the
/// rounds use `seeds`. Relative paths resolve against `base_dir`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub network: NetworkSource,
    pub fleet: FleetSource,
    pub attacks: Vec<AttackStrategy>,
    pub defenses: Vec<DefenseStrategy>,
    pub k: usize,
    pub ambush_delay: f64,
    pub window_multipliers: Vec<f64>,
    pub attacker_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub nested_plans: bool,
    pub epsilon: f64,
    pub output_dir: PathBuf,
    pub base_dir: PathBuf,
}

pub const DEFAULT_K: usize = 30;
pub const DEFAULT_SEED_COUNT: u64 = 10;
pub const DEFAULT_ATTACKER_COUNTS: [usize; 7] = [1, 5, 10, 20, 30, 40, 50];

/// 1.0, 1.25, ..., 3.5
pub fn default_window_multipliers() -> Vec<f64> {
    (0..=10).map(|i| 1.0 + 0.25 * f64::from(i)).collect()
}

/// Help text listing every config key.
pub const CONFIG_KEYS: &str = "\
Config file: one `key = value` per line, lists comma-separated, `#` starts a comment.
  nodes, edges          network files (or `city` instead)
  city                  generated network, e.g. `two_cluster a=16 b=16 bridges=2`
  jobcards              job-card file (or `fleet` instead)
  fleet                 generated cards, e.g. `couriers=40 stops=1 window=540 home=a away=b`
  seed                  base seed for rankings and generators (default 0)
  seeds                 round seeds (default seed, seed+1, ..., seed+9)
  attacks               attack strategies (default all nine)
  defenses              defense strategies (default shortest,inverse,mixnet)
  k                     attacker count (default 30)
  M                     ambush delay in seconds (default 600)
  window_multipliers    window sweep values (default 1.0..3.5 step 0.25)
  attacker_counts       attacker sweep values (default 1,5,10,20,30,40,50)
  nested_plans          true: plans grow by superset in k (default false)
  epsilon               equilibrium tolerance (default 1e-6)
  output_dir            output directory, relative to the working directory (default out)

Relative input paths resolve against the config file's directory.";

impl ExperimentConfig {
    /// Defaults everywhere except the two inputs.
    pub fn new(network: NetworkSource, fleet: FleetSource) -> Self {
        ExperimentConfig {
            seed: 0,
            network,
            fleet,
            attacks: AttackStrategy::ALL.to_vec(),
            defenses: DefenseStrategy::TRIO.to_vec(),
            k: DEFAULT_K,
            ambush_delay: DEFAULT_AMBUSH_DELAY,
            window_multipliers: default_window_multipliers(),
            attacker_counts: DEFAULT_ATTACKER_COUNTS.to_vec(),
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            nested_plans: false,
            epsilon: DEFAULT_EPSILON,
            output_dir: PathBuf::from("out"),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn parse(text: &str, name: &str, base_dir: PathBuf) -> Result<Self> {
        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { file: name.into(), line: i + 1, message };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if pairs.iter().any(|(_, seen, _)| *seen == k) {
                return Err(err(format!("key `{k}` given twice")));
            }
            pairs.push((i + 1, k, v));
        }
        let get = |key: &str| pairs.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));
        let fail = |line: usize, message: String| Error::Parse { file: name.into(), line, message };
        fn one<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value `{v}`"))
        }
        fn list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(one).collect()
        }
        fn named<T: std::str::FromStr<Err = Error>>(v: &str) -> std::result::Result<Vec<T>, String> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|e: Error| e.to_string()))
                .collect()
        }
        for (line, key, _) in &pairs {
            const KNOWN: [&str; 16] = [
                "nodes", "edges", "city", "jobcards", "fleet", "seed", "seeds", "attacks", "defenses", "k", "M",
                "window_multipliers", "attacker_counts", "nested_plans", "epsilon", "output_dir",
            ];
            if !KNOWN.contains(&key.as_str()) {
                return Err(fail(*line, format!("unknown key `{key}`")));
            }
        }
        let network = match (get("nodes"), get("edges"), get("city")) {
            (Some((_, n)), Some((_, e)), None) => NetworkSource::Files { nodes: n.into(), edges: e.into() },
            (None, None, Some((l, c))) => NetworkSource::City(c.parse().map_err(|e: Error| fail(l, e.to_string()))?),
            _ => return Err(Error::Validation(format!("{name}: give either `nodes` and `edges`, or `city`"))),
        };
        let fleet = match (get("jobcards"), get("fleet")) {
            (Some((_, p)), None) => FleetSource::File(p.into()),
            (None, Some((l, f))) => FleetSource::Generated(f.parse().map_err(|e: Error| fail(l, e.to_string()))?),
            _ => return Err(Error::Validation(format!("{name}: give either `jobcards` or `fleet`"))),
        };
        let mut cfg = ExperimentConfig::new(network, fleet);
        cfg.base_dir = base_dir;
        macro_rules! field {
            ($key:literal, $parse:expr, $slot:expr) => {
                if let Some((l, v)) = get($key) {
                    $slot = $parse(v).map_err(|m| fail(l, format!("{}: {m}", $key)))?;
                }
            };
        }
        field!("seed", one, cfg.seed);
        cfg.seeds = (cfg.seed..cfg.seed + DEFAULT_SEED_COUNT).collect();
        field!("seeds", list, cfg.seeds);
        field!("attacks", named, cfg.attacks);
        field!("defenses", named, cfg.defenses);
        field!("k", one, cfg.k);
        field!("M", one, cfg.ambush_delay);
        field!("window_multipliers", list, cfg.window_multipliers);
        field!("attacker_counts", list, cfg.attacker_counts);
        field!("nested_plans", one, cfg.nested_plans);
        field!("epsilon", one, cfg.epsilon);
        if let Some((_, v)) = get("output_dir") {
            cfg.output_dir = v.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Moves the base seed. Round seeds follow when they are still the
    /// default run from the old base.
    pub fn set_seed(&mut self, seed: u64) {
        let defaults: Vec<u64> = (self.seed..self.seed + DEFAULT_SEED_COUNT).collect();
        if self.seeds == defaults {
            self.seeds = (seed..seed + DEFAULT_SEED_COUNT).collect();
        }
        self.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.attacks.is_empty() || self.defenses.is_empty() {
            return bad("attack and defense lists must be nonempty".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.ambush_delay > 0.0 && self.ambush_delay.is_finite()) {
            return bad(format!("M must be positive, got {}", self.ambush_delay));
        }
        if let Some(m) = self.window_multipliers.iter().find(|&&m| !(m >= 1.0 && m.is_finite())) {
            return bad(format!("window multipliers must be ≥ 1, got {m}"));
        }
        if self.attacker_counts.contains(&0) {
            return bad("attacker counts must be at least 1".into());
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// One `key = value` line per setting, defaults filled in. The output
    /// directory is left out: it says where results go, not what they are.
    pub fn canonical(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let mut s = String::new();
        match &self.network {
            NetworkSource::Files { nodes, edges } => {
                let _ = writeln!(s, "nodes = {}", nodes.display());
                let _ = writeln!(s, "edges = {}", edges.display());
            }
            NetworkSource::City(c) => {
                let _ = writeln!(s, "city = {c}");
            }
        }
        match &self.fleet {
            FleetSource::File(p) => {
                let _ = writeln!(s, "jobcards = {}", p.display());
            }
            FleetSource::Generated(f) => {
                let _ = writeln!(s, "fleet = {f}");
            }
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "seeds = {}", join(&self.seeds));
        let _ = writeln!(s, "attacks = {}", join(&self.attacks));
        let _ = writeln!(s, "defenses = {}", join(&self.defenses));
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "M = {}", self.ambush_delay);
        let _ = writeln!(s, "window_multipliers = {}", join(&self.window_multipliers));
        let _ = writeln!(s, "attacker_counts = {}", join(&self.attacker_counts));
        let _ = writeln!(s, "nested_plans = {}", self.nested_plans);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        s
    }

    /// SHA-256 of [`ExperimentConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

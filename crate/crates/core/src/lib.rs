//! Denial-of-service interdiction games on road networks.
//!
//! An attacker stations `k` units on road segments; every courier that
//! drives over an occupied segment is held up for a fixed ambush delay.
//! Couriers pick routes with one of several defense strategies and the
//! simulator measures how many deliveries miss their windows. Running every
//! attack against every defense yields a zero-sum payoff matrix whose pure
//! and mixed equilibria are computed by [`game`].
//!
//! The numerical kernels (paths, centralities, modularity, eigen-solvers and
//! the matrix-game solver) are generic over [`Scalar`]; the aliases at the
//! crate root fix them to `f64` (and `f32` where that is useful).

pub mod analysis;
pub mod attack;
pub mod defense;
mod error;
pub mod game;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod rng;
mod scalar;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use analysis::{CentralityKind, Partition};
pub use attack::{AttackPlan, AttackStrategy};
pub use defense::{DefenseStrategy, RoutePlan};
pub use game::EquilibriumKind;
pub use graph::{load_network, EdgeIx, EdgeSet, NodeIx, RoadNetwork};
pub use harness::ExperimentConfig;
pub use sim::{JobCard, RoundMetrics, Stop, StopStatus, TourResult};

/// Shortest path with `f64` weights.
pub type Path = graph::Path<f64>;
/// Shortest path with `f32` weights.
pub type Path32 = graph::Path<f32>;

/// Centrality scores in `f64`.
pub type CentralityScores = analysis::CentralityScores<f64>;
/// Centrality scores in `f32`.
pub type CentralityScores32 = analysis::CentralityScores<f32>;
/// Attack × defense payoffs in `f64`.
pub type PayoffMatrix = game::PayoffMatrix<f64>;
/// Attack × defense payoffs in `f32`.
pub type PayoffMatrix32 = game::PayoffMatrix<f32>;
/// Equilibrium strategies and value in `f64`.
pub type Equilibrium = game::Equilibrium<f64>;
/// Equilibrium strategies and value in `f32`.
pub type Equilibrium32 = game::Equilibrium<f32>;

//! Job-card files, distance-preserving trace synthesis and generated
//! cities for desk-scale experiments.

mod city;
mod fleet;
mod jobcards;
mod traces;

pub use city::{generate_city, BlockKind, CitySpec, TwoClusterSpec, CITY_SPEED, GEOMETRIC_RETRIES};
pub use fleet::{generate_fleet, FleetSpec};
pub use jobcards::{parse_jobcards, read_jobcards, write_jobcards, JOBCARDS_HEADER};
pub use traces::{synthesize_traces, write_audit, LegAudit, Synthesis, TraceTolerance, AUDIT_HEADER, MAX_WIDENINGS};

//! Global minimum search over discrete landscapes by greedy basin mining,
//! logarithmic selection over the sorted basin list, and a schedule-driven
//! walk whose uphill moves are accepted with barrier-tunnelling probability.

mod instances;
mod model;
mod pipeline;
mod scaling;
mod schedule;
mod search;

use thiserror::Error;

pub use instances::{derive_seed, random_ising, random_table};
pub use model::{reduce, ConfigId, EnergyModel, IsingSpec, Landscape, MAX_SPINS};
pub use pipeline::{run_pipeline, PipelineConfig};
pub use scaling::{scaling_experiment, ScalingRow, TABLE4_SIZES};
pub use schedule::{
    map_schedule, map_schedule_with, select_gap, AdiabaticSchedule, GapCandidate, RampPoint, WorkingGap,
    DEFAULT_STEPS_PER_UNIT, MAX_RAMP_STEPS,
};
pub use search::{
    anneal_walk, enumerate_candidates, evolve, greedy_baseline, greedy_descent, select_ground_states, selection_bound,
    BarrierMap, Candidate, CandidateList, EvolveOptions, OptimizerReport, WalkOutcome, DEFAULT_HILL_CLIMB_SEEDS,
};

use crate::tunneling::TunnelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid landscape: {0}")]
    Validation(String),
    #[error("no gap candidate meets the transition-time and stability thresholds")]
    NoAdmissibleGap,
    #[error("working gap is zero")]
    DegenerateGap,
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("barrier mapping failed: {0}")]
    Barrier(#[from] TunnelError),
}

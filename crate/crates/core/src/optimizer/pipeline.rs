//! The five phases end to end: reduce, select the working gap, map it onto a
//! schedule, evolve, and record what each phase cost.

use std::time::Instant;

use super::model::{reduce, Landscape};
use super::schedule::{map_schedule_with, select_gap, GapCandidate, DEFAULT_STEPS_PER_UNIT};
use super::search::{evolve, BarrierMap, EvolveOptions, OptimizerReport, DEFAULT_HILL_CLIMB_SEEDS};
use super::OptimizerError;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub gap_candidates: Vec<GapCandidate>,
    pub min_transition: f64,
    pub min_stability: f64,
    pub drive_energy: f64,
    pub safety: f64,
    pub steps_per_unit: f64,
    pub hill_climb_seeds: usize,
    pub barrier: BarrierMap,
}

impl Default for PipelineConfig {
    /// Two levels: a short-lived unstable one and the stable working level.
    fn default() -> Self {
        Self {
            gap_candidates: vec![GapCandidate::new(0.2, 1.0, 0.1), GapCandidate::new(0.5, 10.0, 0.9)],
            min_transition: 5.0,
            min_stability: 0.5,
            drive_energy: 1.0,
            safety: 1.0,
            steps_per_unit: DEFAULT_STEPS_PER_UNIT,
            hill_climb_seeds: DEFAULT_HILL_CLIMB_SEEDS,
            barrier: BarrierMap::default(),
        }
    }
}

pub fn run_pipeline(landscape: &Landscape, cfg: &PipelineConfig, seed: u64) -> Result<OptimizerReport, OptimizerError> {
    let t = Instant::now();
    let model = reduce(landscape)?;
    let t_reduce = t.elapsed();

    let t = Instant::now();
    let gap = select_gap(&cfg.gap_candidates, cfg.min_transition, cfg.min_stability)?;
    let t_gap = t.elapsed();

    let t = Instant::now();
    let schedule = map_schedule_with(&gap, cfg.drive_energy, cfg.safety, cfg.steps_per_unit)?;
    let t_map = t.elapsed();

    let barrier = cfg.barrier;
    let opts = EvolveOptions { hill_climb_seeds: cfg.hill_climb_seeds, length_scale: barrier.length_scale };
    let mut report = evolve(&model, &schedule, &|de, w| barrier.barrier(de, w), seed, &opts)?;
    let mut timings = vec![("reduction", t_reduce), ("optimization", t_gap), ("mapping", t_map)];
    timings.append(&mut report.phase_timings);
    report.phase_timings = timings;
    Ok(report)
}

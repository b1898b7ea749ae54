//! Greedy basin mining, logarithmic ground-state selection and the
//! tunnelling-driven evolution over an [`EnergyModel`].

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{ConfigId, EnergyModel};
use super::schedule::AdiabaticSchedule;
use super::OptimizerError;
use crate::tunneling::{self, TunnelBarrier, TunnelError, ELECTRON_MASS, EV, HBAR};

/// Default number of random hill-climb seeds for Ising models.
pub const DEFAULT_HILL_CLIMB_SEEDS: usize = 32;

/// Maps an uphill energy step and hop width onto a physical barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierMap {
    /// eV per landscape energy unit.
    pub energy_scale_ev: f64,
    /// Metres per hop.
    pub length_scale: f64,
    /// Energy of the tunnelling particle (eV); the barrier sits `dE` above it.
    pub particle_energy_ev: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for BarrierMap {
    fn default() -> Self {
        Self { energy_scale_ev: 0.01, length_scale: 0.5e-9, particle_energy_ev: 0.75, mass: ELECTRON_MASS, hbar: HBAR }
    }
}

impl BarrierMap {
    pub fn barrier(&self, delta_e: f64, width: f64) -> TunnelBarrier {
        TunnelBarrier {
            barrier_height: (self.particle_energy_ev + delta_e * self.energy_scale_ev) * EV,
            particle_energy: self.particle_energy_ev * EV,
            width,
            mass: self.mass,
            hbar: self.hbar,
        }
    }
}

/// Steepest descent: move to the lowest strictly-lower neighbour (lowest id
/// on ties) until none exists.
pub fn greedy_descent(model: &EnergyModel, start: ConfigId) -> ConfigId {
    let mut cur = start;
    let mut e_cur = model.energy(cur);
    loop {
        let mut best: Option<(f64, ConfigId)> = None;
        model.for_each_neighbor(cur, |nb| {
            let e = e_cur + model.delta(cur, nb);
            if e < e_cur && best.is_none_or(|(be, bid)| e < be || (e == be && nb < bid)) {
                best = Some((e, nb));
            }
        });
        match best {
            Some((e, nb)) => {
                cur = nb;
                e_cur = e;
            }
            None => return cur,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: ConfigId,
    pub energy: f64,
}

/// Deduplicated basin minima sorted by `(energy, id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub sorted: Vec<Candidate>,
    /// Number of descent seeds that were run.
    pub seeds: usize,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn ids(&self) -> Vec<ConfigId> {
        self.sorted.iter().map(|c| c.id).collect()
    }
}

/// Runs greedy descent from every basin seed. Tables are seeded at every
/// local minimum; Ising models from `hill_climb_seeds` random
/// configurations, or from every configuration when that is no more.
pub fn enumerate_candidates(model: &EnergyModel, hill_climb_seeds: usize, seed: u64) -> CandidateList {
    let mut found: Vec<ConfigId> = Vec::new();
    let seeds;
    match model {
        EnergyModel::Table { energies } => {
            let n = energies.len();
            for i in 0..n {
                let left_ok = i == 0 || energies[i - 1] >= energies[i];
                let right_ok = i + 1 == n || energies[i + 1] >= energies[i];
                if left_ok && right_ok {
                    found.push(greedy_descent(model, i as ConfigId));
                }
            }
            seeds = found.len();
        }
        EnergyModel::Ising { .. } => {
            let size = model.size();
            if (hill_climb_seeds as u64) >= size {
                seeds = size as usize;
                found.extend((0..size).map(|s| greedy_descent(model, s)));
            } else {
                seeds = hill_climb_seeds;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_C11B);
                for _ in 0..hill_climb_seeds {
                    let start = rng.random_range(0..size);
                    found.push(greedy_descent(model, start));
                }
            }
        }
    }
    found.sort_unstable();
    found.dedup();
    let mut sorted: Vec<Candidate> = found.into_iter().map(|id| Candidate { id, energy: model.energy(id) }).collect();
    sorted.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.id.cmp(&b.id)));
    CandidateList { sorted, seeds }
}

/// Length of the degenerate ground block at the head of a sorted candidate
/// list, found by bisection. Returns `(block_len, comparisons)`; at most
/// `ceil(log2 k)` comparisons for `k` candidates.
pub fn select_ground_states(sorted: &[Candidate]) -> (usize, u64) {
    if sorted.is_empty() {
        return (0, 0);
    }
    let ground = sorted[0].energy;
    let (mut lo, mut hi) = (1usize, sorted.len());
    let mut comparisons = 0u64;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        comparisons += 1;
        if sorted[mid].energy <= ground {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (lo, comparisons)
}

/// `ceil(log2 k) + 1`.
pub fn selection_bound(k: usize) -> u64 {
    if k <= 1 {
        return 1;
    }
    u64::from(usize::BITS - (k - 1).leading_zeros()) + 1
}

#[derive(Debug, Clone)]
pub struct WalkOutcome {
    pub best: Candidate,
    pub visited: HashSet<ConfigId>,
    pub escapes: u64,
    pub moves: u64,
}

fn escape_probability(
    model: &EnergyModel,
    barrier_map: &dyn Fn(f64, f64) -> TunnelBarrier,
    from: ConfigId,
    to: ConfigId,
    delta: f64,
    drive_fraction: f64,
    length_scale: f64,
) -> Result<f64, OptimizerError> {
    if drive_fraction <= 0.0 {
        return Ok(0.0);
    }
    let width = f64::from(model.hop_distance(from, to)) * length_scale;
    let t = match tunneling::transmission(&barrier_map(delta, width)) {
        Ok(r) => r.transmission,
        // Level moves see no barrier.
        Err(TunnelError::AboveBarrier { .. }) => 1.0,
        Err(e) => return Err(OptimizerError::Barrier(e)),
    };
    Ok(t * drive_fraction)
}

/// Schedule-length random walk from `start`. Each ramp step proposes one
/// random neighbour per neighbourhood slot; downhill moves are taken, others
/// tunnel with probability `T(barrier) * drive / E`.
pub fn anneal_walk(
    model: &EnergyModel,
    schedule: &AdiabaticSchedule,
    barrier_map: &dyn Fn(f64, f64) -> TunnelBarrier,
    length_scale: f64,
    start: ConfigId,
    seed: u64,
) -> Result<WalkOutcome, OptimizerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = start;
    let mut e_cur = model.energy(cur);
    let mut best = Candidate { id: cur, energy: e_cur };
    let mut visited = HashSet::new();
    visited.insert(cur);
    let mut escapes = 0;
    let mut moves = 0;
    let per_step = model.neighborhood_size();
    let mut nbrs = Vec::with_capacity(per_step);
    if per_step == 0 {
        return Ok(WalkOutcome { best, visited, escapes, moves });
    }
    for point in &schedule.ramp {
        let drive_fraction = if schedule.drive_energy > 0.0 { point.drive / schedule.drive_energy } else { 0.0 };
        for _ in 0..per_step {
            nbrs.clear();
            model.for_each_neighbor(cur, |j| nbrs.push(j));
            let to = nbrs[rng.random_range(0..nbrs.len())];
            let delta = model.delta(cur, to);
            let accept = if delta < 0.0 {
                true
            } else {
                let p = escape_probability(model, barrier_map, cur, to, delta, drive_fraction, length_scale)?;
                let u: f64 = rng.random();
                let ok = u < p;
                if ok {
                    escapes += 1;
                }
                ok
            };
            if accept {
                cur = to;
                e_cur += delta;
                moves += 1;
                visited.insert(cur);
                // Re-evaluate the incumbent exactly to avoid drift from summed deltas.
                if e_cur <= best.energy {
                    let exact = model.energy(cur);
                    e_cur = exact;
                    if exact < best.energy || (exact == best.energy && cur < best.id) {
                        best = Candidate { id: cur, energy: exact };
                    }
                }
            }
        }
    }
    Ok(WalkOutcome { best, visited, escapes, moves })
}

#[derive(Debug, Clone)]
pub struct OptimizerReport {
    pub best_id: ConfigId,
    pub best_energy: f64,
    pub visited_count: u64,
    pub comparison_count: u64,
    pub escape_count: u64,
    pub candidate_count: usize,
    pub seed: u64,
    pub phase_timings: Vec<(&'static str, Duration)>,
}

// Wall-clock timings are not part of a run's identity.
impl PartialEq for OptimizerReport {
    fn eq(&self, other: &Self) -> bool {
        self.best_id == other.best_id
            && self.best_energy == other.best_energy
            && self.visited_count == other.visited_count
            && self.comparison_count == other.comparison_count
            && self.escape_count == other.escape_count
            && self.candidate_count == other.candidate_count
            && self.seed == other.seed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub hill_climb_seeds: usize,
    /// Metres per hop, used as barrier width.
    pub length_scale: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { hill_climb_seeds: DEFAULT_HILL_CLIMB_SEEDS, length_scale: BarrierMap::default().length_scale }
    }
}

/// Mines basin minima, walks from the best of them under the schedule, and
/// returns the minimum over the walk and the candidate list.
pub fn evolve(
    model: &EnergyModel,
    schedule: &AdiabaticSchedule,
    barrier_map: &dyn Fn(f64, f64) -> TunnelBarrier,
    seed: u64,
    opts: &EvolveOptions,
) -> Result<OptimizerReport, OptimizerError> {
    if !schedule.is_admissible() {
        return Err(OptimizerError::Schedule(format!(
            "tau*g^2 = {} is below drive energy {}",
            schedule.total_time * schedule.gap * schedule.gap,
            schedule.drive_energy
        )));
    }
    let t0 = Instant::now();
    let candidates = enumerate_candidates(model, opts.hill_climb_seeds, seed);
    let (_, mut comparisons) = select_ground_states(&candidates.sorted);
    let incumbent = candidates.sorted[0];
    let t_mine = t0.elapsed();

    let t1 = Instant::now();
    let walk = anneal_walk(model, schedule, barrier_map, opts.length_scale, incumbent.id, seed)?;
    let t_walk = t1.elapsed();

    comparisons += 1;
    let best = if walk.best.energy < incumbent.energy
        || (walk.best.energy == incumbent.energy && walk.best.id < incumbent.id)
    {
        walk.best
    } else {
        incumbent
    };
    Ok(OptimizerReport {
        best_id: best.id,
        best_energy: best.energy,
        visited_count: walk.visited.len() as u64,
        comparison_count: comparisons,
        escape_count: walk.escapes,
        candidate_count: candidates.len(),
        seed,
        phase_timings: vec![("mining", t_mine), ("evolution", t_walk)],
    })
}

/// Best candidate from basin mining alone, the baseline `evolve` must not lose to.
pub fn greedy_baseline(model: &EnergyModel, hill_climb_seeds: usize, seed: u64) -> Candidate {
    enumerate_candidates(model, hill_climb_seeds, seed).sorted[0]
}

#[cfg(test)]
mod tests {
    use super::super::model::{reduce, IsingSpec, Landscape};
    use super::super::schedule::{map_schedule, AdiabaticSchedule, GapCandidate, WorkingGap};
    use super::*;

    fn table(v: &[f64]) -> EnergyModel {
        reduce(&Landscape::Table(v.to_vec())).unwrap()
    }

    fn schedule(e: f64, g: f64) -> AdiabaticSchedule {
        let wg = WorkingGap { candidates: vec![GapCandidate::new(g, 1.0, 1.0)], chosen: 0 };
        map_schedule(&wg, e, 1.0).unwrap()
    }

    fn default_map() -> impl Fn(f64, f64) -> TunnelBarrier {
        let m = BarrierMap::default();
        move |de, w| m.barrier(de, w)
    }

    // Brute-force scan for strict-or-plateau local minima.
    fn local_minima_oracle(v: &[f64]) -> Vec<usize> {
        (0..v.len()).filter(|&i| (i == 0 || v[i - 1] >= v[i]) && (i + 1 == v.len() || v[i + 1] >= v[i])).collect()
    }

    #[test]
    fn table_candidates_sorted_by_energy() {
        let v = [5.0, 1.0, 4.0, 0.0, 6.0];
        assert_eq!(local_minima_oracle(&v), vec![1, 3]);
        let c = enumerate_candidates(&table(&v), 0, 0);
        assert_eq!(c.ids(), vec![3, 1]);
    }

    #[test]
    fn monotone_table_has_single_minimum() {
        let c = enumerate_candidates(&table(&[9.0, 7.0, 4.0, 2.0, -1.0]), 0, 0);
        assert_eq!(c.ids(), vec![4]);
    }

    #[test]
    fn degenerate_ising_ground_states_kept_in_id_order() {
        let m = reduce(&Landscape::Ising(IsingSpec { sites: 2, couplings: vec![(0, 1, 1.0)], transverse_field: 1.0 }))
            .unwrap();
        let c = enumerate_candidates(&m, DEFAULT_HILL_CLIMB_SEEDS, 7);
        assert_eq!(c.ids(), vec![0, 3]);
        assert!(c.sorted.iter().all(|x| x.energy == -1.0));
        assert_eq!(select_ground_states(&c.sorted).0, 2);
    }

    #[test]
    fn greedy_stalls_in_first_basin() {
        assert_eq!(greedy_descent(&table(&[5.0, 1.0, 4.0, 0.0, 6.0]), 0), 1);
    }

    #[test]
    fn selection_comparisons_within_bound() {
        for k in 1..300usize {
            let sorted: Vec<Candidate> = (0..k).map(|i| Candidate { id: i as u64, energy: (i / 3) as f64 }).collect();
            let (block, cmp) = select_ground_states(&sorted);
            assert_eq!(block, k.min(3));
            assert!(cmp < selection_bound(k), "k={k} cmp={cmp}");
        }
        assert_eq!(selection_bound(1), 1);
        assert_eq!(selection_bound(2), 2);
        assert_eq!(selection_bound(1024), 11);
        assert_eq!(selection_bound(1025), 12);
    }

    #[test]
    fn walk_escapes_first_basin() {
        let m = table(&[5.0, 1.0, 4.0, 0.0, 6.0]);
        let bm = default_map();
        let lscale = BarrierMap::default().length_scale;
        for e in [0.5, 1.0, 2.0] {
            let s = schedule(e, 0.5);
            let hits = (0..1000u64)
                .filter(|&seed| {
                    let w = anneal_walk(&m, &s, &bm, lscale, 0, seed).unwrap();
                    w.best.id == 3
                })
                .count();
            assert!(hits >= 990, "drive {e}: {hits}/1000");
        }
    }

    #[test]
    fn zero_drive_reduces_to_greedy() {
        let m = table(&[5.0, 1.0, 4.0, 0.0, 6.0, 3.0, 2.0, 7.0]);
        let s = AdiabaticSchedule::linear(4.0, 0.5, 0.0, 100.0).unwrap();
        let bm = default_map();
        for seed in 0..50 {
            let r = evolve(&m, &s, &bm, seed, &EvolveOptions::default()).unwrap();
            let g = greedy_baseline(&m, DEFAULT_HILL_CLIMB_SEEDS, seed);
            assert_eq!((r.best_id, r.best_energy), (g.id, g.energy));
            assert_eq!(r.escape_count, 0);
            assert_eq!(r.visited_count, 1);
            let w = anneal_walk(&m, &s, &bm, 0.5e-9, 0, seed).unwrap();
            assert_eq!(w.best.id, greedy_descent(&m, 0));
        }
    }

    #[test]
    fn inadmissible_schedule_rejected() {
        let m = table(&[1.0, 0.0]);
        let s = AdiabaticSchedule::linear(0.5, 1.0, 1.0, 10.0).unwrap();
        let bm = default_map();
        assert!(matches!(evolve(&m, &s, &bm, 0, &EvolveOptions::default()), Err(OptimizerError::Schedule(_))));
    }

    #[test]
    fn evolve_is_deterministic() {
        let m = table(&[3.0, 1.0, 2.0, 0.5, 4.0, 0.2, 5.0, 0.1, 6.0]);
        let s = schedule(1.0, 0.5);
        let bm = default_map();
        let a = evolve(&m, &s, &bm, 11, &EvolveOptions::default()).unwrap();
        let b = evolve(&m, &s, &bm, 11, &EvolveOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.best_energy, m.energy(a.best_id));
        assert!(a.comparison_count <= selection_bound(a.candidate_count));
    }

    #[test]
    fn single_entry_table() {
        let m = table(&[2.5]);
        let s = schedule(1.0, 1.0);
        let r = evolve(&m, &s, &default_map(), 0, &EvolveOptions::default()).unwrap();
        assert_eq!(r.best_id, 0);
        assert!(r.comparison_count <= 1);
    }
}

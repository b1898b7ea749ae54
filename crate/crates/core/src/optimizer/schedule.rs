//! Working-gap selection and the adiabatic drive schedule `tau = E / g^2`.

use super::OptimizerError;

/// Ramp points per unit of schedule time.
pub const DEFAULT_STEPS_PER_UNIT: f64 = 100.0;
/// Upper bound on ramp length.
pub const MAX_RAMP_STEPS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCandidate {
    pub gap: f64,
    pub transition_time: f64,
    pub stability: f64,
}

impl GapCandidate {
    pub fn new(gap: f64, transition_time: f64, stability: f64) -> Self {
        Self { gap, transition_time, stability }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkingGap {
    pub candidates: Vec<GapCandidate>,
    pub chosen: usize,
}

impl WorkingGap {
    pub fn gap(&self) -> f64 {
        self.candidates[self.chosen].gap
    }

    pub fn chosen(&self) -> &GapCandidate {
        &self.candidates[self.chosen]
    }
}

/// Keeps candidates that live long enough and are stable enough, then takes
/// the smallest gap (largest evolution-time headroom). Ties go to the more
/// stable candidate, then to the earlier one.
pub fn select_gap(
    candidates: &[GapCandidate],
    min_transition: f64,
    min_stability: f64,
) -> Result<WorkingGap, OptimizerError> {
    if candidates.is_empty() {
        return Err(OptimizerError::NoAdmissibleGap);
    }
    let chosen = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.gap.is_finite() && c.gap > 0.0 && c.transition_time >= min_transition && c.stability >= min_stability
        })
        .min_by(|(ia, a), (ib, b)| a.gap.total_cmp(&b.gap).then(b.stability.total_cmp(&a.stability)).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .ok_or(OptimizerError::NoAdmissibleGap)?;
    Ok(WorkingGap { candidates: candidates.to_vec(), chosen })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampPoint {
    pub step: u64,
    pub drive: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticSchedule {
    pub total_time: f64,
    pub gap: f64,
    pub drive_energy: f64,
    /// Drive level at the end of each step; non-decreasing, within `[0, drive_energy]`.
    pub ramp: Vec<RampPoint>,
}

impl AdiabaticSchedule {
    /// Linear ramp from 0 to `drive_energy` over `total_time`, sampled at
    /// `steps_per_unit` points per unit time (at least one point).
    pub fn linear(total_time: f64, gap: f64, drive_energy: f64, steps_per_unit: f64) -> Result<Self, OptimizerError> {
        if !(total_time.is_finite() && total_time >= 0.0) {
            return Err(OptimizerError::Schedule(format!("invalid total time {total_time}")));
        }
        if !(drive_energy.is_finite() && drive_energy >= 0.0) {
            return Err(OptimizerError::Schedule(format!("invalid drive energy {drive_energy}")));
        }
        if !(steps_per_unit.is_finite() && steps_per_unit > 0.0) {
            return Err(OptimizerError::Schedule(format!("invalid resolution {steps_per_unit}")));
        }
        let want = (total_time * steps_per_unit).ceil().max(1.0);
        if want > MAX_RAMP_STEPS as f64 {
            return Err(OptimizerError::Schedule(format!(
                "schedule needs {want:.0} ramp steps (limit {MAX_RAMP_STEPS})"
            )));
        }
        let n = want as u64;
        let ramp = (1..=n)
            .map(|k| RampPoint { step: k, drive: (drive_energy * k as f64 / n as f64).min(drive_energy) })
            .collect();
        Ok(Self { total_time, gap, drive_energy, ramp })
    }

    /// Continuous drive level at time `t`.
    pub fn drive_at(&self, t: f64) -> f64 {
        if self.total_time <= 0.0 {
            return self.drive_energy;
        }
        self.drive_energy * (t / self.total_time).clamp(0.0, 1.0)
    }

    /// `tau * g^2 >= E`.
    pub fn is_admissible(&self) -> bool {
        self.gap > 0.0 && self.total_time * self.gap * self.gap >= self.drive_energy
    }
}

pub fn map_schedule(gap: &WorkingGap, drive_energy: f64, safety: f64) -> Result<AdiabaticSchedule, OptimizerError> {
    map_schedule_with(gap, drive_energy, safety, DEFAULT_STEPS_PER_UNIT)
}

pub fn map_schedule_with(
    gap: &WorkingGap,
    drive_energy: f64,
    safety: f64,
    steps_per_unit: f64,
) -> Result<AdiabaticSchedule, OptimizerError> {
    let g = gap.gap();
    if !(g > 0.0 && g.is_finite()) {
        return Err(OptimizerError::DegenerateGap);
    }
    if !(drive_energy > 0.0 && drive_energy.is_finite()) {
        return Err(OptimizerError::Schedule(format!("drive energy must be positive (got {drive_energy})")));
    }
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(OptimizerError::Schedule(format!("safety factor must be >= 1 (got {safety})")));
    }
    let mut tau = safety * drive_energy / (g * g);
    // Rounding can leave tau*g^2 one ulp short of E.
    while tau * g * g < drive_energy {
        tau = tau.next_up();
    }
    AdiabaticSchedule::linear(tau, g, drive_energy, steps_per_unit)
}

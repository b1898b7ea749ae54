//! Rectangular-barrier transmission in the WKB decay approximation.
//!
//! A particle of energy `E` below a barrier of height `U` and width `L`
//! has decay constant `k2 = sqrt(2 m (U - E)) / hbar` inside the barrier
//! and crosses it with probability `T = exp(-2 k2 L)`.

use thiserror::Error;

/// Joules per electronvolt.
pub const EV: f64 = 1.602_176_634e-19;
/// Electron mass used by the rhodium-dye worked examples (kg).
pub const ELECTRON_MASS: f64 = 9.1e-31;
/// Reduced Planck constant used by the rhodium-dye worked examples (J·s).
pub const HBAR: f64 = 1.054e-34;
/// Hydrogenic ionization energy (eV).
pub const RYDBERG_EV: f64 = 13.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TunnelError {
    #[error("level ordering requires n2 > n1 >= 1 (got n1={n1}, n2={n2})")]
    LevelOrdering { n1: u32, n2: u32 },
    #[error("effective charge must be positive (got {0})")]
    NonPositiveCharge(f64),
    #[error("particle energy {energy} J is not below the barrier height {height} J")]
    AboveBarrier { energy: f64, height: f64 },
    #[error("invalid barrier: {0}")]
    InvalidBarrier(&'static str),
    #[error("electron count must be positive")]
    ZeroCount,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelBarrier {
    /// Barrier height `U` in joules.
    pub barrier_height: f64,
    /// Particle energy `E` in joules.
    pub particle_energy: f64,
    /// Barrier width `L` in metres.
    pub width: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl TunnelBarrier {
    /// Electron barrier with heights given in eV and the worked-example mass and ħ.
    pub fn electron_ev(barrier_height_ev: f64, particle_energy_ev: f64, width: f64) -> Self {
        Self {
            barrier_height: barrier_height_ev * EV,
            particle_energy: particle_energy_ev * EV,
            width,
            mass: ELECTRON_MASS,
            hbar: HBAR,
        }
    }

    pub fn barrier_height_ev(&self) -> f64 {
        self.barrier_height / EV
    }

    pub fn particle_energy_ev(&self) -> f64 {
        self.particle_energy / EV
    }

    pub fn validate(&self) -> Result<(), TunnelError> {
        let finite =
            [self.barrier_height, self.particle_energy, self.width, self.mass, self.hbar].iter().all(|v| v.is_finite());
        if !finite {
            return Err(TunnelError::InvalidBarrier("non-finite parameter"));
        }
        if self.barrier_height <= 0.0 {
            return Err(TunnelError::InvalidBarrier("barrier height must be positive"));
        }
        if self.width < 0.0 {
            return Err(TunnelError::InvalidBarrier("width must be non-negative"));
        }
        if self.mass <= 0.0 || self.hbar <= 0.0 {
            return Err(TunnelError::InvalidBarrier("mass and hbar must be positive"));
        }
        if self.particle_energy < 0.0 {
            return Err(TunnelError::InvalidBarrier("particle energy must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelResult {
    /// Decay constant inside the barrier (1/m).
    pub k2: f64,
    /// `2 k2 L`.
    pub exponent: f64,
    pub transmission: f64,
}

/// Transition energy between hydrogenic levels `n1 -> n2`, scaled by `z_eff`, in eV.
pub fn barrier_height_bohr(z_eff: f64, n1: u32, n2: u32) -> Result<f64, TunnelError> {
    if n1 < 1 || n2 <= n1 {
        return Err(TunnelError::LevelOrdering { n1, n2 });
    }
    if !(z_eff > 0.0) || !z_eff.is_finite() {
        return Err(TunnelError::NonPositiveCharge(z_eff));
    }
    let inv_sq = |n: u32| 1.0 / (f64::from(n) * f64::from(n));
    Ok(RYDBERG_EV * z_eff * (inv_sq(n1) - inv_sq(n2)))
}

/// Transmission through a classically forbidden barrier. Refuses `E >= U`.
pub fn transmission(b: &TunnelBarrier) -> Result<TunnelResult, TunnelError> {
    b.validate()?;
    if b.particle_energy >= b.barrier_height {
        return Err(TunnelError::AboveBarrier { energy: b.particle_energy, height: b.barrier_height });
    }
    let k2 = (2.0 * b.mass * (b.barrier_height - b.particle_energy)).sqrt() / b.hbar;
    let exponent = 2.0 * k2 * b.width;
    Ok(TunnelResult { k2, exponent, transmission: (-exponent).exp() })
}

/// Mean per-electron energy in eV when `total_energy` joules is shared by `electron_count` electrons.
pub fn average_electron_energy(total_energy: f64, electron_count: f64) -> Result<f64, TunnelError> {
    if !(electron_count > 0.0) {
        return Err(TunnelError::ZeroCount);
    }
    Ok(total_energy / EV / electron_count)
}

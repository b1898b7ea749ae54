//! Discrete energy landscapes in Hamiltonian form.

use std::collections::BTreeMap;

use super::OptimizerError;

/// Configuration index. For Ising models bit `i` set means spin `i` is down.
pub type ConfigId = u64;

/// Largest Ising model the search accepts (ids must fit in a `u64` with headroom).
pub const MAX_SPINS: usize = 62;

/// Raw input to [`reduce`].
#[derive(Debug, Clone, PartialEq)]
pub enum Landscape {
    /// One energy per configuration; neighbours are adjacent indices.
    Table(Vec<f64>),
    Ising(IsingSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingSpec {
    pub sites: usize,
    /// `(i, j, J_ij)` entries. Either or both orientations may be given; if
    /// both are present they must agree.
    pub couplings: Vec<(usize, usize, f64)>,
    pub transverse_field: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnergyModel {
    Table {
        energies: Vec<f64>,
    },
    Ising {
        sites: usize,
        /// Canonical `i < j` couplings in index order.
        couplings: Vec<(usize, usize, f64)>,
        /// Per-site neighbour lists `(j, J_ij)` for single-flip energy deltas.
        adjacency: Vec<Vec<(usize, f64)>>,
        transverse_field: f64,
    },
}

pub fn reduce(landscape: &Landscape) -> Result<EnergyModel, OptimizerError> {
    match landscape {
        Landscape::Table(energies) => {
            if energies.is_empty() {
                return Err(OptimizerError::Validation("energy table is empty".into()));
            }
            if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
                return Err(OptimizerError::Validation(format!("energy {i} is not finite")));
            }
            Ok(EnergyModel::Table { energies: energies.clone() })
        }
        Landscape::Ising(spec) => reduce_ising(spec),
    }
}

fn reduce_ising(spec: &IsingSpec) -> Result<EnergyModel, OptimizerError> {
    let n = spec.sites;
    if n == 0 || n > MAX_SPINS {
        return Err(OptimizerError::Validation(format!("site count must be in 1..={MAX_SPINS} (got {n})")));
    }
    if !(spec.transverse_field.is_finite() && spec.transverse_field >= 0.0) {
        return Err(OptimizerError::Validation("transverse field must be non-negative".into()));
    }
    let mut canonical: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, j, value) in &spec.couplings {
        if i >= n || j >= n {
            return Err(OptimizerError::Validation(format!("coupling ({i},{j}) out of range")));
        }
        if !value.is_finite() {
            return Err(OptimizerError::Validation(format!("coupling ({i},{j}) is not finite")));
        }
        if i == j {
            if value != 0.0 {
                return Err(OptimizerError::Validation(format!("diagonal coupling ({i},{i}) must be zero")));
            }
            continue;
        }
        let key = (i.min(j), i.max(j));
        match canonical.get(&key) {
            Some(&prev) if prev != value => {
                return Err(OptimizerError::Validation(format!(
                    "asymmetric coupling between {} and {}: {prev} vs {value}",
                    key.0, key.1
                )));
            }
            _ => {
                canonical.insert(key, value);
            }
        }
    }
    let couplings: Vec<_> = canonical.into_iter().filter(|(_, v)| *v != 0.0).map(|((i, j), v)| (i, j, v)).collect();
    let mut adjacency = vec![Vec::new(); n];
    for &(i, j, v) in &couplings {
        adjacency[i].push((j, v));
        adjacency[j].push((i, v));
    }
    Ok(EnergyModel::Ising { sites: n, couplings, adjacency, transverse_field: spec.transverse_field })
}

#[inline]
fn spin(id: ConfigId, site: usize) -> f64 {
    if id >> site & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl EnergyModel {
    /// Number of configurations.
    pub fn size(&self) -> u64 {
        match self {
            EnergyModel::Table { energies } => energies.len() as u64,
            EnergyModel::Ising { sites, .. } => 1u64 << sites,
        }
    }

    pub fn energy(&self, id: ConfigId) -> f64 {
        match self {
            EnergyModel::Table { energies } => energies[id as usize],
            EnergyModel::Ising { couplings, .. } => {
                -couplings.iter().map(|&(i, j, v)| v * spin(id, i) * spin(id, j)).sum::<f64>()
            }
        }
    }

    /// Energy change from moving `id` to its neighbour `to`.
    pub fn delta(&self, id: ConfigId, to: ConfigId) -> f64 {
        match self {
            EnergyModel::Table { energies } => energies[to as usize] - energies[id as usize],
            EnergyModel::Ising { adjacency, .. } => {
                let site = (id ^ to).trailing_zeros() as usize;
                let field: f64 = adjacency[site].iter().map(|&(j, v)| v * spin(id, j)).sum();
                2.0 * spin(id, site) * field
            }
        }
    }

    /// Neighbours in ascending id order for tables, flip order for Ising.
    pub fn neighbors(&self, id: ConfigId) -> Vec<ConfigId> {
        let mut out = Vec::with_capacity(self.neighborhood_size());
        self.for_each_neighbor(id, |j| out.push(j));
        out
    }

    pub fn for_each_neighbor(&self, id: ConfigId, mut f: impl FnMut(ConfigId)) {
        match self {
            EnergyModel::Table { energies } => {
                if id > 0 {
                    f(id - 1);
                }
                if id + 1 < energies.len() as u64 {
                    f(id + 1);
                }
            }
            EnergyModel::Ising { sites, .. } => {
                for site in 0..*sites {
                    f(id ^ (1 << site));
                }
            }
        }
    }

    pub fn neighborhood_size(&self) -> usize {
        match self {
            EnergyModel::Table { energies } => energies.len().saturating_sub(1).min(2),
            EnergyModel::Ising { sites, .. } => *sites,
        }
    }

    /// Number of elementary hops between two neighbouring configurations.
    pub fn hop_distance(&self, a: ConfigId, b: ConfigId) -> u32 {
        match self {
            EnergyModel::Table { .. } => a.abs_diff(b) as u32,
            EnergyModel::Ising { .. } => (a ^ b).count_ones(),
        }
    }

    pub fn transverse_field(&self) -> Option<f64> {
        match self {
            EnergyModel::Table { .. } => None,
            EnergyModel::Ising { transverse_field, .. } => Some(*transverse_field),
        }
    }
}

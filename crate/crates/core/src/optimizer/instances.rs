//! Seeded random landscapes for experiments and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{IsingSpec, Landscape};

/// `n` energies drawn uniformly from `[0, 1)`.
pub fn random_table(n: usize, seed: u64) -> Landscape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Landscape::Table((0..n).map(|_| rng.random::<f64>()).collect())
}

/// All-to-all Ising glass with couplings uniform in `[-1, 1)`.
pub fn random_ising(sites: usize, seed: u64) -> Landscape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut couplings = Vec::with_capacity(sites * sites.saturating_sub(1) / 2);
    for i in 0..sites {
        for j in i + 1..sites {
            couplings.push((i, j, rng.random_range(-1.0..1.0)));
        }
    }
    Landscape::Ising(IsingSpec { sites, couplings, transverse_field: 1.0 })
}

/// Deterministic per-run seed derived from an experiment seed and run coordinates.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a mixed input
    let mut z =
        base.wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Fermionic Matsubara grids, the Bethe-lattice local propagator, the bath
//! closure and Dyson inversions.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{DmftError, HubbardParams};

/// `w_n = (2n + 1) pi / beta` for `n = 0..n_freq`.
pub fn matsubara_grid(beta: f64, n_freq: usize) -> Vec<f64> {
    (0..n_freq).map(|n| matsubara_freq(beta, n)).collect()
}

#[inline]
pub fn matsubara_freq(beta: f64, n: usize) -> f64 {
    (2 * n + 1) as f64 * PI / beta
}

/// A function sampled on the positive fermionic Matsubara frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MatsubaraGreen {
    pub beta: f64,
    pub values: Vec<Complex64>,
}

impl MatsubaraGreen {
    pub fn zeros(beta: f64, n_freq: usize) -> Self {
        Self { beta, values: vec![Complex64::new(0.0, 0.0); n_freq] }
    }

    pub fn from_fn(beta: f64, n_freq: usize, f: impl Fn(f64) -> Complex64) -> Self {
        Self { beta, values: (0..n_freq).map(|n| f(matsubara_freq(beta, n))).collect() }
    }

    /// The free propagator `1 / (i w_n)`.
    pub fn free(beta: f64, n_freq: usize) -> Self {
        Self::from_fn(beta, n_freq, |w| Complex64::new(0.0, -1.0 / w))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn freq(&self, n: usize) -> f64 {
        matsubara_freq(self.beta, n)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        matsubara_grid(self.beta, self.len())
    }

    pub fn check_grid(&self, other: &MatsubaraGreen) -> Result<(), DmftError> {
        if self.len() != other.len() || self.beta != other.beta {
            return Err(DmftError::GridMismatch);
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self { beta: self.beta, values: self.values.iter().enumerate().map(|(n, &v)| f(n, v)).collect() }
    }

    /// Largest pointwise modulus of the difference.
    pub fn max_dist(&self, other: &MatsubaraGreen) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Index of the first frequency where the imaginary part is not negative.
    pub fn first_non_causal(&self) -> Option<usize> {
        self.values.iter().position(|v| !(v.im < 0.0))
    }
}

/// Semicircular density of states of half-bandwidth `d`, integrated against
/// `1 / (z - e)` in closed form: `G(z) = 2 / (z + w)` with `w^2 = z^2 - d^2`
/// and `w ~ z` at large `|z|`.
pub fn semicircle_hilbert(z: Complex64, d: f64) -> Complex64 {
    let w = z * (Complex64::new(1.0, 0.0) - (d * d) / (z * z)).sqrt();
    2.0 / (z + w)
}

/// Local lattice propagator at `z = i w_n + mu - Sigma(i w_n)`.
pub fn lattice_green(sigma: &MatsubaraGreen, p: &HubbardParams) -> Result<MatsubaraGreen, DmftError> {
    p.validate()?;
    if sigma.beta != p.beta {
        return Err(DmftError::GridMismatch);
    }
    let d = p.half_bandwidth();
    let g = sigma.map(|n, s| {
        let z = Complex64::new(p.mu, sigma.freq(n)) - s;
        semicircle_hilbert(z, d)
    });
    if let Some(n) = g.first_non_causal() {
        return Err(DmftError::Causality { index: n, freq: g.freq(n) });
    }
    Ok(g)
}

/// Bethe-lattice hybridization `Delta = t^2 G`.
pub fn bath_update(g_lat: &MatsubaraGreen, p: &HubbardParams) -> MatsubaraGreen {
    let t2 = p.t * p.t;
    g_lat.map(|_, g| g * t2)
}

/// Weiss field from `G0^-1 = G_imp^-1 + Sigma`.
pub fn weiss_field(g_imp: &MatsubaraGreen, sigma: &MatsubaraGreen) -> Result<MatsubaraGreen, DmftError> {
    g_imp.check_grid(sigma)?;
    if let Some(n) = g_imp.values.iter().position(|g| g.norm() == 0.0) {
        return Err(DmftError::Singular { index: n });
    }
    Ok(g_imp.map(|n, g| 1.0 / (1.0 / g + sigma.values[n])))
}

/// Interacting propagator from `G^-1 = G0^-1 - Sigma`.
pub fn dyson(g0: &MatsubaraGreen, sigma: &MatsubaraGreen) -> Result<MatsubaraGreen, DmftError> {
    g0.check_grid(sigma)?;
    if let Some(n) = g0.values.iter().position(|g| g.norm() == 0.0) {
        return Err(DmftError::Singular { index: n });
    }
    Ok(g0.map(|n, g| 1.0 / (1.0 / g - sigma.values[n])))
}

//! Bethe-lattice Hubbard model reduced to a self-consistent impurity problem
//! on the fermionic Matsubara axis.

pub mod green;
pub mod ipt;

use num_complex::Complex64;
use thiserror::Error;

pub use green::{
    bath_update, dyson, lattice_green, matsubara_freq, matsubara_grid, semicircle_hilbert, weiss_field, MatsubaraGreen,
};
pub use ipt::{matsubara_to_tau, solve_impurity, tau_to_matsubara};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmftError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("frequency grids differ in size or temperature")]
    GridMismatch,
    #[error("causality violated at n = {index} (w = {freq})")]
    Causality { index: usize, freq: f64 },
    #[error("propagator vanishes at n = {index}")]
    Singular { index: usize },
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("solver needs half filling (mu = U/2), got mu = {mu}, U = {u}")]
    NotHalfFilled { mu: f64, u: f64 },
    #[error("no convergence after {} iterations (last residual {:e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { history: Vec<f64>, state: Box<DmftState> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubbardParams {
    pub t: f64,
    pub u: f64,
    pub mu: f64,
    pub beta: f64,
}

impl HubbardParams {
    pub fn half_filled(t: f64, u: f64, beta: f64) -> Self {
        Self { t, u, mu: u / 2.0, beta }
    }

    pub fn half_bandwidth(&self) -> f64 {
        2.0 * self.t
    }

    pub fn is_half_filled(&self) -> bool {
        (self.mu - self.u / 2.0).abs() <= 1e-12 * (1.0 + self.u.abs())
    }

    pub fn validate(&self) -> Result<(), DmftError> {
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(DmftError::InvalidParams(format!("hopping must be positive (got {})", self.t)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(DmftError::InvalidParams(format!("beta must be positive (got {})", self.beta)));
        }
        if !(self.u.is_finite() && self.u >= 0.0) {
            return Err(DmftError::InvalidParams(format!("U must be non-negative (got {})", self.u)));
        }
        if !self.mu.is_finite() {
            return Err(DmftError::InvalidParams("chemical potential is not finite".into()));
        }
        Ok(())
    }
}

impl Default for HubbardParams {
    fn default() -> Self {
        Self::half_filled(1.0, 1.0, 16.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmftOptions {
    pub alpha: f64,
    pub max_iter: usize,
    pub mixing: f64,
    pub n_freq: usize,
    /// Imaginary-time intervals; zero picks `8 * n_freq`.
    pub tau_points: usize,
}

impl Default for DmftOptions {
    fn default() -> Self {
        Self { alpha: 1e-6, max_iter: 200, mixing: 0.7, n_freq: 512, tau_points: 0 }
    }
}

impl DmftOptions {
    pub fn validate(&self) -> Result<(), DmftError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(DmftError::InvalidParams(format!("alpha must be positive (got {})", self.alpha)));
        }
        if self.max_iter == 0 {
            return Err(DmftError::InvalidParams("max_iter must be at least 1".into()));
        }
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(DmftError::InvalidParams(format!("mixing must be in (0, 1] (got {})", self.mixing)));
        }
        if self.n_freq == 0 {
            return Err(DmftError::InvalidParams("n_freq must be at least 1".into()));
        }
        Ok(())
    }

    fn tau_intervals(&self) -> usize {
        if self.tau_points == 0 {
            8 * self.n_freq
        } else {
            self.tau_points
        }
    }
}

/// One row of loop bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual: f64,
    pub re_g0: f64,
    pub im_g_imp_w0: f64,
    pub im_sigma_w0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmftState {
    pub params: HubbardParams,
    pub sigma: MatsubaraGreen,
    pub g_imp: MatsubaraGreen,
    pub g_lat: MatsubaraGreen,
    pub delta: MatsubaraGreen,
    pub weiss: MatsubaraGreen,
    pub iteration: usize,
    pub residual: f64,
    pub history: Vec<IterationRecord>,
}

impl DmftState {
    pub fn residuals(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.residual).collect()
    }

    /// `max |G_lat - G_imp|`.
    pub fn consistency_gap(&self) -> f64 {
        self.g_lat.max_dist(&self.g_imp)
    }
}

/// Largest `|w_n |Im G(i w_n)| - 1|` over the top tenth of the grid.
pub fn tail_deviation(g: &MatsubaraGreen) -> f64 {
    let start = g.len() - g.len().div_ceil(10);
    (start..g.len()).map(|n| (g.freq(n) * g.values[n].im.abs() - 1.0).abs()).fold(0.0, f64::max)
}

fn check_causal(g: &MatsubaraGreen) -> Result<(), DmftError> {
    match g.first_non_causal() {
        Some(index) => Err(DmftError::Causality { index, freq: g.freq(index) }),
        None => Ok(()),
    }
}

/// Iterates lattice propagator, bath, Weiss field and impurity solver from
/// `Sigma = 0` until the mixed self-energy moves by at most `alpha`.
pub fn self_consistency_loop(p: &HubbardParams, opts: &DmftOptions) -> Result<DmftState, DmftError> {
    self_consistency_loop_with(p, opts, |_| {})
}

/// As [`self_consistency_loop`], calling `observe` after every accepted iterate.
pub fn self_consistency_loop_with(
    p: &HubbardParams,
    opts: &DmftOptions,
    mut observe: impl FnMut(&DmftState),
) -> Result<DmftState, DmftError> {
    p.validate()?;
    opts.validate()?;
    if !p.is_half_filled() {
        return Err(DmftError::NotHalfFilled { mu: p.mu, u: p.u });
    }
    // The Hartree term U/2 cancels mu at half filling.
    let lattice = HubbardParams { mu: p.mu - p.u / 2.0, ..*p };
    let n = opts.n_freq;
    let zeros = MatsubaraGreen::zeros(p.beta, n);
    let mut state = DmftState {
        params: *p,
        sigma: zeros.clone(),
        g_imp: zeros.clone(),
        g_lat: zeros.clone(),
        delta: zeros.clone(),
        weiss: zeros,
        iteration: 0,
        residual: f64::INFINITY,
        history: Vec::new(),
    };
    for iter in 1..=opts.max_iter {
        let g_lat = lattice_green(&state.sigma, &lattice)?;
        let delta = bath_update(&g_lat, &lattice);
        let weiss = weiss_field(&g_lat, &state.sigma)?;
        let sigma_new = solve_impurity(&weiss, p, opts.tau_intervals())?;
        let m = opts.mixing;
        let mixed = sigma_new.map(|k, s| m * s + (1.0 - m) * state.sigma.values[k]);
        if let Some(index) = mixed.values.iter().position(|s| s.im > 0.0) {
            return Err(DmftError::Causality { index, freq: mixed.freq(index) });
        }
        let g_imp = dyson(&weiss, &mixed)?;
        check_causal(&g_imp)?;
        let residual = mixed.max_dist(&state.sigma);
        state.history.push(IterationRecord {
            iter,
            residual,
            re_g0: weiss.values[0].re,
            im_g_imp_w0: g_imp.values[0].im,
            im_sigma_w0: mixed.values[0].im,
        });
        state.sigma = mixed;
        state.g_imp = g_imp;
        state.g_lat = g_lat;
        state.delta = delta;
        state.weiss = weiss;
        state.iteration = iter;
        state.residual = residual;
        observe(&state);
        if residual <= opts.alpha {
            state.g_lat = lattice_green(&state.sigma, &lattice)?;
            return Ok(state);
        }
    }
    Err(DmftError::NonConvergence { history: state.residuals(), state: Box::new(state) })
}

/// `(w_n, G_imp, Sigma)` rows of a converged state.
pub fn final_dump(state: &DmftState) -> Vec<(f64, Complex64, Complex64)> {
    (0..state.g_imp.len()).map(|n| (state.g_imp.freq(n), state.g_imp.values[n], state.sigma.values[n])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(alpha: f64) -> DmftOptions {
        DmftOptions { alpha, ..DmftOptions::default() }
    }

    #[test]
    fn params_validation() {
        assert!(HubbardParams::default().validate().is_ok());
        assert_eq!(HubbardParams::default().half_bandwidth(), 2.0);
        for bad in [
            HubbardParams { t: 0.0, ..Default::default() },
            HubbardParams { beta: -1.0, ..Default::default() },
            HubbardParams { u: -0.5, mu: -0.25, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(DmftError::InvalidParams(_))));
        }
    }

    #[test]
    fn options_validation() {
        let p = HubbardParams::default();
        for bad in [
            DmftOptions { alpha: 0.0, ..Default::default() },
            DmftOptions { max_iter: 0, ..Default::default() },
            DmftOptions { mixing: 0.0, ..Default::default() },
            DmftOptions { mixing: 1.5, ..Default::default() },
        ] {
            assert!(matches!(self_consistency_loop(&p, &bad), Err(DmftError::InvalidParams(_))));
        }
    }

    #[test]
    fn free_limit_is_reached_in_one_pass() {
        let p = HubbardParams::half_filled(1.0, 0.0, 16.0);
        let s = self_consistency_loop(&p, &opts(1e-10)).unwrap();
        assert_eq!(s.iteration, 1);
        assert_eq!(s.residual, 0.0);
        let exact = MatsubaraGreen::from_fn(16.0, 512, |w| semicircle_hilbert(Complex64::new(0.0, w), 2.0));
        assert!(s.g_imp.max_dist(&exact) < 1e-12);
    }

    #[test]
    fn loose_tolerance_stops_after_first_iteration() {
        let p = HubbardParams::half_filled(1.0, 1.0, 16.0);
        let s = self_consistency_loop(&p, &opts(1e3)).unwrap();
        assert_eq!(s.iteration, 1);
        assert_eq!(s.history.len(), 1);
    }

    #[test]
    fn interacting_loop_converges() {
        let p = HubbardParams::half_filled(1.0, 1.0, 16.0);
        let s = self_consistency_loop(&p, &opts(1e-6)).unwrap();
        assert!(s.residual <= 1e-6);
        let r = s.residuals();
        assert!(r[3..].windows(2).all(|w| w[1] <= w[0]), "{r:?}");
        assert!(s.consistency_gap() <= 1e-5);
        assert!(s.g_imp.values.iter().all(|g| g.re.abs() < 1e-10 && g.im < 0.0));
        assert!(s.sigma.values.iter().all(|v| v.im <= 0.0));
        assert!(tail_deviation(&s.g_imp) < 1e-3);
    }

    #[test]
    fn exhausted_budget_reports_history() {
        let p = HubbardParams::half_filled(1.0, 2.0, 16.0);
        let o = DmftOptions { max_iter: 2, ..opts(1e-12) };
        match self_consistency_loop(&p, &o) {
            Err(DmftError::NonConvergence { history, state }) => {
                assert_eq!(history.len(), 2);
                assert_eq!(state.iteration, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn doped_input_rejected() {
        let p = HubbardParams { mu: 0.0, ..HubbardParams::half_filled(1.0, 1.0, 16.0) };
        assert!(matches!(self_consistency_loop(&p, &opts(1e-6)), Err(DmftError::NotHalfFilled { .. })));
    }
}

//! Second-order impurity solver at half filling.
//!
//! The Weiss field is taken to imaginary time with its `1/(i w)` tail
//! removed analytically, cubed into `Sigma(tau) = U^2 G0(tau)^2 G0(beta - tau)`,
//! and transformed back by integrating the piecewise-linear interpolant of
//! `Sigma(tau)` exactly against `exp(i w_n tau)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::green::MatsubaraGreen;
use super::{DmftError, HubbardParams};

/// Largest tolerated deviation of `w * |G0(i w)|` from one at the top of the grid.
pub const TAIL_TOLERANCE: f64 = 0.05;

/// `exp(i pi k / L)` for `k = 0..2L`; every `exp(+-i w_n tau_j)` on a grid
/// `tau_j = j beta / L` is an entry of this table.
struct PhaseTable {
    l: usize,
    table: Vec<Complex64>,
}

impl PhaseTable {
    fn new(l: usize) -> Self {
        let table = (0..2 * l).map(|k| Complex64::from_polar(1.0, PI * k as f64 / l as f64)).collect();
        Self { l, table }
    }

    /// `exp(i w_n tau_j)`.
    #[inline]
    fn phase(&self, n: usize, j: usize) -> Complex64 {
        self.table[((2 * n + 1) * j) % (2 * self.l)]
    }
}

/// `G(tau_j)` for `j = 0..=L` (`tau_0 = 0+`, `tau_L = beta-`) from positive
/// Matsubara samples, assuming `G(i w) ~ 1/(i w)`.
pub fn matsubara_to_tau(g: &MatsubaraGreen, l: usize) -> Vec<f64> {
    let phases = PhaseTable::new(l);
    to_tau_with(g, &phases)
}

fn to_tau_with(g: &MatsubaraGreen, phases: &PhaseTable) -> Vec<f64> {
    let beta = g.beta;
    let residual: Vec<Complex64> =
        g.values.iter().enumerate().map(|(n, &v)| v - Complex64::new(0.0, -1.0 / g.freq(n))).collect();
    (0..=phases.l)
        .map(|j| {
            let s: f64 = residual.iter().enumerate().map(|(n, r)| (r * phases.phase(n, j).conj()).re).sum();
            2.0 / beta * s - 0.5
        })
        .collect()
}

/// Exact transform of the piecewise-linear interpolant through `f(tau_j)`,
/// `j = 0..=L`, onto the first `n_freq` fermionic frequencies.
pub fn tau_to_matsubara(f: &[f64], beta: f64, n_freq: usize) -> MatsubaraGreen {
    let l = f.len() - 1;
    let phases = PhaseTable::new(l);
    from_tau_with(f, beta, n_freq, &phases)
}

fn from_tau_with(f: &[f64], beta: f64, n_freq: usize, phases: &PhaseTable) -> MatsubaraGreen {
    let l = phases.l;
    let h = beta / l as f64;
    let slopes: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    // Sum_j s_j (e_{j+1} - e_j) = Sum_j e_j (s_{j-1} - s_j) with s_{-1} = s_L = 0
    let kinks: Vec<f64> = (0..=l)
        .map(|j| {
            let left = if j == 0 { 0.0 } else { slopes[j - 1] };
            let right = if j == l { 0.0 } else { slopes[j] };
            left - right
        })
        .collect();
    MatsubaraGreen::from_fn(beta, n_freq, |_| Complex64::new(0.0, 0.0)).map(|n, _| {
        let w = super::green::matsubara_freq(beta, n);
        let iw = Complex64::new(0.0, w);
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &k) in kinks.iter().enumerate() {
            if k != 0.0 {
                acc += phases.phase(n, j) * k;
            }
        }
        -(f[0] + f[l]) / iw + acc / (w * w)
    })
}

/// Second-order self-energy of the half-filled impurity for Weiss field `g0`.
/// `tau_points` is the number of imaginary-time intervals.
pub fn solve_impurity(g0: &MatsubaraGreen, p: &HubbardParams, tau_points: usize) -> Result<MatsubaraGreen, DmftError> {
    p.validate()?;
    if !p.is_half_filled() {
        return Err(DmftError::NotHalfFilled { mu: p.mu, u: p.u });
    }
    if g0.beta != p.beta {
        return Err(DmftError::GridMismatch);
    }
    let n_freq = g0.len();
    if n_freq == 0 {
        return Err(DmftError::GridTooSmall("empty frequency grid".into()));
    }
    if p.u == 0.0 {
        return Ok(MatsubaraGreen::zeros(g0.beta, n_freq));
    }
    if tau_points < 2 * n_freq {
        return Err(DmftError::GridTooSmall(format!(
            "{tau_points} imaginary-time intervals cannot resolve {n_freq} frequencies (need >= {})",
            2 * n_freq
        )));
    }
    let top = n_freq - 1;
    let tail = g0.freq(top) * g0.values[top].norm();
    if (tail - 1.0).abs() > TAIL_TOLERANCE {
        return Err(DmftError::GridTooSmall(format!(
            "w*|G0| = {tail:.4} at the highest frequency; the 1/(i w) tail is not reached"
        )));
    }
    let phases = PhaseTable::new(tau_points);
    let g_tau = to_tau_with(g0, &phases);
    let l = tau_points;
    let u2 = p.u * p.u;
    let sigma_tau: Vec<f64> = (0..=l).map(|j| u2 * g_tau[j] * g_tau[j] * g_tau[l - j]).collect();
    Ok(from_tau_with(&sigma_tau, g0.beta, n_freq, &phases))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half(u: f64, beta: f64) -> HubbardParams {
        HubbardParams::half_filled(1.0, u, beta)
    }

    /// Dense trapezoid of `int_0^beta exp(i w tau) f(tau) dtau`.
    fn trapezoid(f: impl Fn(f64) -> f64, w: f64, beta: f64, points: usize) -> Complex64 {
        let h = beta / points as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=points {
            let tau = j as f64 * h;
            let weight = if j == 0 || j == points { 0.5 } else { 1.0 };
            acc += Complex64::from_polar(1.0, w * tau) * f(tau) * weight;
        }
        acc * h
    }

    #[test]
    fn free_propagator_is_flat_in_tau() {
        let g = MatsubaraGreen::free(10.0, 64);
        let tau = matsubara_to_tau(&g, 256);
        assert!(tau.iter().all(|v| (v + 0.5).abs() < 1e-14));
    }

    #[test]
    fn two_level_round_trip() {
        // G(i w) = 1/2 [1/(i w - a) + 1/(i w + a)]
        let (beta, a) = (16.0, 0.8);
        let g = MatsubaraGreen::from_fn(beta, 2048, |w| {
            let iw = Complex64::new(0.0, w);
            0.5 * (1.0 / (iw - a) + 1.0 / (iw + a))
        });
        let tau = matsubara_to_tau(&g, 4096);
        let exact =
            |t: f64| -0.5 * ((-a * t).exp() / (1.0 + (-beta * a).exp()) + (a * t).exp() / (1.0 + (beta * a).exp()));
        for (j, v) in tau.iter().enumerate().step_by(97) {
            let t = j as f64 * beta / 4096.0;
            assert!((v - exact(t)).abs() < 1e-4, "tau={t}: {v} vs {}", exact(t));
        }
        let back = tau_to_matsubara(&tau, beta, 8);
        for n in 0..8 {
            assert!((back.values[n] - g.values[n]).norm() < 1e-4);
        }
    }

    #[test]
    fn zero_interaction_gives_zero_self_energy() {
        let g0 = MatsubaraGreen::free(16.0, 128);
        let s = solve_impurity(&g0, &half(0.0, 16.0), 1024).unwrap();
        assert!(s.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn free_weiss_field_against_trapezoid() {
        let beta = 16.0;
        let g0 = MatsubaraGreen::free(beta, 256);
        let s = solve_impurity(&g0, &half(1.0, beta), 2048).unwrap();
        // g0(tau) = -1/2, so Sigma(tau) = U^2 (-1/2)^3
        let oracle = trapezoid(|_| -0.125, g0.freq(0), beta, 1 << 14);
        assert!((s.values[0] - oracle).norm() < 1e-6, "{} vs {}", s.values[0], oracle);
        // analytic: U^2 / (4 i w)
        assert!((s.values[0] - Complex64::new(0.0, -0.25 / g0.freq(0))).norm() < 1e-12);
    }

    #[test]
    fn two_level_weiss_field_against_trapezoid() {
        let (beta, a) = (16.0, 0.8);
        let g0 = MatsubaraGreen::from_fn(beta, 1024, |w| {
            let iw = Complex64::new(0.0, w);
            0.5 * (1.0 / (iw - a) + 1.0 / (iw + a))
        });
        let u = 1.3;
        let s = solve_impurity(&g0, &half(u, beta), 8192).unwrap();
        let g_tau =
            |t: f64| -0.5 * ((-a * t).exp() / (1.0 + (-beta * a).exp()) + (a * t).exp() / (1.0 + (beta * a).exp()));
        let sigma_tau = |t: f64| u * u * g_tau(t).powi(2) * g_tau(beta - t);
        for n in [0, 1, 7] {
            let oracle = trapezoid(sigma_tau, g0.freq(n), beta, 1 << 14);
            assert!((s.values[n] - oracle).norm() < 2e-5, "n={n}: {} vs {oracle}", s.values[n]);
        }
    }

    #[test]
    fn self_energy_scales_with_u_squared() {
        let g0 = MatsubaraGreen::from_fn(16.0, 256, |w| 1.0 / Complex64::new(0.0, w + 0.5 / w));
        let s1 = solve_impurity(&g0, &half(1.0, 16.0), 2048).unwrap();
        let s2 = solve_impurity(&g0, &half(2.0, 16.0), 2048).unwrap();
        for (a, b) in s1.values.iter().zip(&s2.values) {
            assert!((b - 4.0 * a).norm() < 1e-13);
            assert!(a.re.abs() < 1e-12);
            assert!(a.im <= 0.0);
        }
    }

    #[test]
    fn grid_checks() {
        let g0 = MatsubaraGreen::free(16.0, 256);
        assert!(matches!(solve_impurity(&g0, &half(1.0, 16.0), 100), Err(DmftError::GridTooSmall(_))));
        // Tail not reached: a wide band on a short grid.
        let wide = MatsubaraGreen::from_fn(16.0, 4, |w| 1.0 / Complex64::new(0.0, w + 50.0 / w));
        assert!(matches!(solve_impurity(&wide, &half(1.0, 16.0), 64), Err(DmftError::GridTooSmall(_))));
        let doped = HubbardParams { mu: 0.1, ..half(1.0, 16.0) };
        assert!(matches!(solve_impurity(&g0, &doped, 1024), Err(DmftError::NotHalfFilled { .. })));
    }
}

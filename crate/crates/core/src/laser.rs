//! Q-switched dye-laser pulse from the two-variable rate equations.
//!
//! The population inversion density `n` and the intracavity photon density
//! `phi` obey
//!
//! ```text
//! dn/dt   = -r * sigma * c * n * phi
//! dphi/dt = sigma * c * n * phi - W_L * phi
//! ```
//!
//! integrated with the forward Euler scheme. Output energy per step is the
//! photon flux leaking through the output coupler.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaserError {
    #[error("invalid laser configuration: {0}")]
    Config(String),
    #[error("numeric instability at step {step}: non-finite state")]
    NumericInstability { step: u64 },
    #[error("no pulse: output is identically zero")]
    NoPulse,
    #[error("pulse truncated: output still above half maximum at the end of the trace")]
    PulseTruncated,
}

/// Stability guard on `dt * sigma * c * n0`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserConfig {
    /// Speed of light (m/s).
    pub c: f64,
    pub lambda_pump: f64,
    pub lambda_laser: f64,
    /// Output-coupler reflectivity.
    pub r1: f64,
    /// End-mirror reflectivity.
    pub r2: f64,
    /// Output beam cross section (m²).
    pub beam_area: f64,
    /// Cavity length l′ (m).
    pub cavity_len: f64,
    /// Gain-medium length x (m).
    pub gain_len: f64,
    /// Stimulated-emission cross section (m²).
    pub sigma_se: f64,
    pub dt: f64,
    /// Fraction of pump energy stored in the inversion.
    pub eta1: f64,
    /// Planck constant (J·s).
    pub h: f64,
    /// Pump energy (J).
    pub e_in: f64,
    pub pump_vol: f64,
    /// Seed photon density (m⁻³).
    pub phi0: f64,
    pub steps: u64,
    /// Inversion reduction factor `r`.
    pub inversion_factor: f64,
}

impl Default for LaserConfig {
    /// Rhodamine dye laser pumped by a 337 nm nitrogen laser.
    fn default() -> Self {
        Self {
            c: 3.0e8,
            lambda_pump: 337e-9,
            lambda_laser: 582e-9,
            r1: 0.08,
            r2: 0.99,
            beam_area: 1e-6,
            cavity_len: 0.095,
            gain_len: 0.01,
            sigma_se: 3.5e-20,
            dt: 0.01e-12,
            eta1: 0.34,
            h: 6.626e-34,
            e_in: 140e-6,
            pump_vol: 1e-8,
            phi0: 9.7e-41,
            // 200 ns window; the 140 µJ pulse peaks near 118 ns.
            steps: 20_000_000,
            inversion_factor: 2.0,
        }
    }
}

impl LaserConfig {
    /// Checks everything that does not need derived quantities.
    pub fn validate(&self) -> Result<(), LaserError> {
        let positive = [
            ("c", self.c),
            ("lambda_pump", self.lambda_pump),
            ("lambda_laser", self.lambda_laser),
            ("beam_area", self.beam_area),
            ("cavity_len", self.cavity_len),
            ("gain_len", self.gain_len),
            ("sigma_se", self.sigma_se),
            ("dt", self.dt),
            ("eta1", self.eta1),
            ("h", self.h),
            ("e_in", self.e_in),
            ("pump_vol", self.pump_vol),
            ("inversion_factor", self.inversion_factor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(LaserError::Config(format!("{name} must be positive and finite (got {v})")));
            }
        }
        if !(self.phi0.is_finite() && self.phi0 >= 0.0) {
            return Err(LaserError::Config(format!("phi0 must be non-negative (got {})", self.phi0)));
        }
        if !(self.r1 > 0.0 && self.r1 < 1.0) {
            return Err(LaserError::Config(format!("r1 must lie in (0, 1) (got {})", self.r1)));
        }
        if !(self.r2 > 0.0 && self.r2 <= 1.0) {
            return Err(LaserError::Config(format!("r2 must lie in (0, 1] (got {})", self.r2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Quantum defect ratio λ_pump / λ_laser.
    pub eta3: f64,
    pub e_pump_photon: f64,
    pub e_laser_photon: f64,
    /// Energy stored in the inversion (J).
    pub e_stored: f64,
    /// Initial inversion density (m⁻³).
    pub n0: f64,
    /// Cavity loss rate (1/s).
    pub loss_rate: f64,
    pub t_round: f64,
}

pub fn derive_params(cfg: &LaserConfig) -> Result<DerivedParams, LaserError> {
    cfg.validate()?;
    let reflect = cfg.r1 * cfg.r2;
    if reflect >= 1.0 {
        return Err(LaserError::Config(format!("r1*r2 = {reflect} leaves no cavity loss")));
    }
    let eta3 = cfg.lambda_pump / cfg.lambda_laser;
    let e_pump_photon = cfg.h * cfg.c / cfg.lambda_pump;
    let e_laser_photon = cfg.h * cfg.c / cfg.lambda_laser;
    let e_stored = cfg.eta1 * eta3 * cfg.e_in;
    let n0 = (e_stored / e_pump_photon) * (1.0 / cfg.pump_vol) * (cfg.gain_len / cfg.cavity_len);
    // W_L = -(c / 2l') ln(R1 R2)
    let loss_rate = (-cfg.c / (2.0 * cfg.cavity_len)) * reflect.ln();
    let stability = cfg.dt * cfg.sigma_se * cfg.c * n0;
    if stability >= STABILITY_LIMIT {
        return Err(LaserError::Config(format!(
            "dt*sigma*c*n0 = {stability:.3e} exceeds the explicit-Euler stability limit {STABILITY_LIMIT}"
        )));
    }
    Ok(DerivedParams {
        eta3,
        e_pump_photon,
        e_laser_photon,
        e_stored,
        n0,
        loss_rate,
        t_round: 2.0 * cfg.cavity_len / cfg.c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateState {
    pub t: f64,
    pub n: f64,
    pub phi: f64,
}

impl RateState {
    pub fn initial(d: &DerivedParams, cfg: &LaserConfig) -> Self {
        Self { t: 0.0, n: d.n0, phi: cfg.phi0 }
    }
}

/// One forward-Euler step. Both updates use the state at the start of the step.
pub fn euler_step(s: RateState, d: &DerivedParams, cfg: &LaserConfig) -> RateState {
    let stim = s.n * cfg.sigma_se * cfg.c * s.phi;
    RateState {
        t: s.t + cfg.dt,
        n: s.n - cfg.inversion_factor * stim * cfg.dt,
        phi: s.phi + (stim - d.loss_rate * s.phi) * cfg.dt,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub n: f64,
    pub phi: f64,
    /// Energy leaving the output coupler during this step (J).
    pub e_out: f64,
    /// Small-signal gain coefficient sigma * n (1/m).
    pub g0: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PulseTrace {
    pub samples: Vec<TraceSample>,
}

impl PulseTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn e_out(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.e_out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseMetrics {
    /// max(e_out) / dt (W).
    pub peak_power: f64,
    pub peak_time: f64,
    /// Full width at half maximum of e_out (s).
    pub fwhm_width: f64,
    pub total_out_energy: f64,
}

/// Runs the integrator, handing every sample to `visit` in time order.
pub fn simulate_with<F>(cfg: &LaserConfig, mut visit: F) -> Result<DerivedParams, LaserError>
where
    F: FnMut(u64, &TraceSample),
{
    let d = derive_params(cfg)?;
    let out_coupling = (1.0 - cfg.r1) * d.e_laser_photon * cfg.beam_area * cfg.c * cfg.dt;
    let mut s = RateState::initial(&d, cfg);
    for step in 0..cfg.steps {
        if !(s.n.is_finite() && s.phi.is_finite()) {
            return Err(LaserError::NumericInstability { step });
        }
        // Sample time is i*dt for the state entering step i.
        let sample = TraceSample {
            t: step as f64 * cfg.dt,
            n: s.n,
            phi: s.phi,
            e_out: s.phi * out_coupling,
            g0: cfg.sigma_se * s.n,
        };
        visit(step, &sample);
        s = euler_step(s, &d, cfg);
    }
    Ok(d)
}

pub fn simulate(cfg: &LaserConfig) -> Result<PulseTrace, LaserError> {
    let mut samples = Vec::with_capacity(usize::try_from(cfg.steps).unwrap_or(0));
    simulate_with(cfg, |_, s| samples.push(*s))?;
    Ok(PulseTrace { samples })
}

/// Linear-interpolated crossing time between two samples straddling `level`.
fn crossing(t_a: f64, e_a: f64, t_b: f64, e_b: f64, level: f64) -> f64 {
    if e_b == e_a {
        return t_a;
    }
    t_a + (level - e_a) / (e_b - e_a) * (t_b - t_a)
}

/// Incremental half-maximum span finder; fed with the trace twice, once to
/// learn the maximum and once to locate the crossings.
#[derive(Debug, Clone)]
struct HalfMaxSpan {
    level: f64,
    prev: Option<(f64, f64)>,
    rise: Option<f64>,
    fall: Option<f64>,
    above: bool,
}

impl HalfMaxSpan {
    fn new(level: f64) -> Self {
        Self { level, prev: None, rise: None, fall: None, above: false }
    }

    fn push(&mut self, t: f64, e: f64) {
        let now_above = e >= self.level;
        match (self.prev, self.above, now_above) {
            (None, _, true) => self.rise = Some(t),
            (Some((tp, ep)), false, true) => {
                if self.rise.is_none() {
                    self.rise = Some(crossing(tp, ep, t, e, self.level));
                }
                self.fall = None;
            }
            (Some((tp, ep)), true, false) => self.fall = Some(crossing(tp, ep, t, e, self.level)),
            _ => {}
        }
        self.above = now_above;
        self.prev = Some((t, e));
    }

    fn width(&self) -> Result<f64, LaserError> {
        match (self.rise, self.fall, self.above) {
            (Some(r), Some(f), false) => Ok(f - r),
            _ => Err(LaserError::PulseTruncated),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PeakScan {
    max: f64,
    t_max: f64,
    total: f64,
}

impl PeakScan {
    fn new() -> Self {
        Self { max: f64::NEG_INFINITY, t_max: 0.0, total: 0.0 }
    }

    fn push(&mut self, t: f64, e: f64) {
        if e > self.max {
            self.max = e;
            self.t_max = t;
        }
        self.total += e;
    }
}

/// Peak power, FWHM and total output of a trace. `r1` is accepted for
/// symmetry with the trace producer; e_out already includes the coupling.
pub fn pulse_metrics(trace: &PulseTrace, _r1: f64, dt: f64) -> Result<PulseMetrics, LaserError> {
    if trace.is_empty() {
        return Err(LaserError::NoPulse);
    }
    let mut peak = PeakScan::new();
    for s in &trace.samples {
        peak.push(s.t, s.e_out);
    }
    if !(peak.max > 0.0) {
        return Err(LaserError::NoPulse);
    }
    let mut span = HalfMaxSpan::new(0.5 * peak.max);
    for s in &trace.samples {
        span.push(s.t, s.e_out);
    }
    Ok(PulseMetrics {
        peak_power: peak.max / dt,
        peak_time: peak.t_max,
        fwhm_width: span.width()?,
        total_out_energy: peak.total,
    })
}

/// Same result as `pulse_metrics(&simulate(cfg)?, ..)` without holding the
/// trace in memory: the integrator is run twice.
pub fn run_metrics(cfg: &LaserConfig) -> Result<PulseMetrics, LaserError> {
    let mut peak = PeakScan::new();
    simulate_with(cfg, |_, s| peak.push(s.t, s.e_out))?;
    if cfg.steps == 0 || !(peak.max > 0.0) {
        return Err(LaserError::NoPulse);
    }
    let mut span = HalfMaxSpan::new(0.5 * peak.max);
    simulate_with(cfg, |_, s| span.push(s.t, s.e_out))?;
    Ok(PulseMetrics {
        peak_power: peak.max / cfg.dt,
        peak_time: peak.t_max,
        fwhm_width: span.width()?,
        total_out_energy: peak.total,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// The swept value (pump energy in J, or time step in s).
    pub value: f64,
    pub result: Result<PulseMetrics, LaserError>,
}

/// One run per pump energy, all other constants fixed. Rows keep input order.
pub fn sweep_energy(cfg: &LaserConfig, energies: &[f64]) -> Result<Vec<SweepRow>, LaserError> {
    if energies.is_empty() {
        return Err(LaserError::Config("energy sweep needs at least one energy".into()));
    }
    if let Some(bad) = energies.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(LaserError::Config(format!("sweep energy must be positive (got {bad})")));
    }
    Ok(energies
        .par_iter()
        .map(|&e_in| SweepRow { value: e_in, result: run_metrics(&LaserConfig { e_in, ..*cfg }) })
        .collect())
}

/// One run per time step. The simulated window `cfg.steps * cfg.dt` is held
/// fixed, so coarser steps take proportionally fewer samples.
pub fn sweep_timestep(cfg: &LaserConfig, dts: &[f64]) -> Result<Vec<SweepRow>, LaserError> {
    if let Some(bad) = dts.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(LaserError::Config(format!("sweep time step must be positive (got {bad})")));
    }
    let window = cfg.steps as f64 * cfg.dt;
    Ok(dts
        .par_iter()
        .map(|&dt| {
            let steps = (window / dt).round() as u64;
            SweepRow { value: dt, result: run_metrics(&LaserConfig { dt, steps, ..*cfg }) }
        })
        .collect())
}

/// Pump energies of the input-energy sweep (J).
pub const TABLE3_ENERGIES: [f64; 12] =
    [140e-6, 150e-6, 200e-6, 250e-6, 500e-6, 1000e-6, 1500e-6, 2000e-6, 2500e-6, 3000e-6, 3500e-6, 4000e-6];

/// Time steps of the duration sweep (s).
pub const TABLE3_TIMESTEPS: [f64; 13] = [
    5e-12, 2.5e-12, 1e-12, 0.1e-12, 0.09e-12, 0.08e-12, 0.07e-12, 0.06e-12, 0.05e-12, 0.04e-12, 0.03e-12, 0.02e-12,
    0.01e-12,
];

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Hand-evaluated from the default constant block.
    #[test]
    fn derived_defaults() {
        let d = derive_params(&LaserConfig::default()).unwrap();
        // (-3e8 / 0.19) * ln(0.08 * 0.99)
        assert!(rel(d.loss_rate, 4.003_861_547_6e9) < 1e-9, "{}", d.loss_rate);
        // 6.626e-34 * 3e8 / 582e-9
        assert!(rel(d.e_laser_photon, 3.415_463_917_5e-19) < 1e-9);
        // 0.34 * (337/582) * 140e-6 / (6.626e-34*3e8/337e-9) / 1e-8 * (0.01/0.095)
        assert!(rel(d.n0, 4.918_667_645_47e20) < 1e-9, "{}", d.n0);
        assert!(rel(d.eta3, 337.0 / 582.0) < 1e-15);
        assert!(d.eta3 < 1.0);
        assert!(rel(d.t_round, 2.0 * 0.095 / 3e8) < 1e-15);
    }

    #[test]
    fn lossless_cavity_rejected() {
        let cfg = LaserConfig { r1: 1.0, r2: 1.0, ..Default::default() };
        assert!(matches!(derive_params(&cfg), Err(LaserError::Config(_))));
        let cfg = LaserConfig { r1: 0.999_999, r2: 1.0, ..Default::default() };
        assert!(derive_params(&cfg).is_ok());
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            LaserConfig { e_in: -1.0, ..Default::default() },
            LaserConfig { dt: 0.0, ..Default::default() },
            LaserConfig { r2: 1.5, ..Default::default() },
            LaserConfig { pump_vol: f64::NAN, ..Default::default() },
            // dt * sigma * c * n0 ~ 0.52
            LaserConfig { dt: 1e-10, ..Default::default() },
        ] {
            assert!(derive_params(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn step_without_field_is_static() {
        let cfg = LaserConfig::default();
        let d = derive_params(&cfg).unwrap();
        let s = euler_step(RateState { t: 0.0, n: d.n0, phi: 0.0 }, &d, &cfg);
        assert_eq!(s.n, d.n0);
        assert_eq!(s.phi, 0.0);
        assert_eq!(s.t, cfg.dt);
    }

    #[test]
    fn step_without_inversion_decays() {
        let cfg = LaserConfig::default();
        let d = derive_params(&cfg).unwrap();
        let s = euler_step(RateState { t: 0.0, n: 0.0, phi: 1e10 }, &d, &cfg);
        assert_eq!(s.n, 0.0);
        assert!(rel(s.phi, 1e10 * (1.0 - d.loss_rate * cfg.dt)) < 1e-15);
    }

    #[test]
    fn first_step_from_initial_state() {
        let cfg = LaserConfig::default();
        let d = derive_params(&cfg).unwrap();
        let s = euler_step(RateState::initial(&d, &cfg), &d, &cfg);
        // phi0 * (1 + (n0*sigma*c - W_L) dt) evaluated by hand:
        // n0*sigma*c = 5.1646010277451e9, minus W_L = 1.1607394801213e9, times dt
        assert!(rel(s.phi, 9.7e-41 * (1.0 + 1.160_739_480_121e-5)) < 1e-12, "{}", s.phi);
        // relative depletion ~1e-51 is below f64 resolution
        assert_eq!(s.n, d.n0);
    }

    #[test]
    fn zero_steps_is_empty() {
        let cfg = LaserConfig { steps: 0, ..Default::default() };
        assert!(simulate(&cfg).unwrap().is_empty());
        assert_eq!(run_metrics(&cfg), Err(LaserError::NoPulse));
    }

    fn triangle(height: f64, half_base: f64, dt: f64) -> PulseTrace {
        let n = (4.0 * half_base / dt).round() as usize;
        let centre = 2.0 * half_base;
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 * dt;
                let e = (height * (1.0 - (t - centre).abs() / half_base)).max(0.0);
                TraceSample { t, n: 0.0, phi: 0.0, e_out: e, g0: 0.0 }
            })
            .collect();
        PulseTrace { samples }
    }

    #[test]
    fn triangle_fwhm_is_half_base() {
        for (w, dt) in [(1.0, 0.1), (3.0, 0.25), (2.5e-9, 1e-11)] {
            let m = pulse_metrics(&triangle(7.0, w, dt), 0.08, dt).unwrap();
            assert!(rel(m.fwhm_width, w) < 1e-9, "{} vs {}", m.fwhm_width, w);
            assert!(rel(m.peak_power, 7.0 / dt) < 1e-6);
        }
    }

    #[test]
    fn flat_trace_has_no_pulse() {
        let trace = PulseTrace {
            samples: (0..10).map(|i| TraceSample { t: i as f64, n: 1.0, phi: 0.0, e_out: 0.0, g0: 0.0 }).collect(),
        };
        assert_eq!(pulse_metrics(&trace, 0.08, 1.0), Err(LaserError::NoPulse));
        assert_eq!(pulse_metrics(&PulseTrace::default(), 0.08, 1.0), Err(LaserError::NoPulse));
    }

    #[test]
    fn rising_trace_is_truncated() {
        let trace = PulseTrace {
            samples: (0..10).map(|i| TraceSample { t: i as f64, n: 1.0, phi: 0.0, e_out: i as f64, g0: 0.0 }).collect(),
        };
        assert_eq!(pulse_metrics(&trace, 0.08, 1.0), Err(LaserError::PulseTruncated));
    }

    // Short high-energy run: every sample obeys positivity, depletion is
    // monotone, and the streaming metrics agree with the stored trace.
    #[test]
    fn short_run_invariants_and_streaming_agreement() {
        let cfg = LaserConfig { e_in: 2000e-6, steps: 500_000, ..Default::default() };
        let d = derive_params(&cfg).unwrap();
        let trace = simulate(&cfg).unwrap();
        assert_eq!(trace.len(), 500_000);
        let mut prev_n = f64::INFINITY;
        for (i, s) in trace.samples.iter().enumerate() {
            assert!(s.phi >= 0.0 && s.e_out >= 0.0);
            assert!(s.n >= 0.0 && s.n <= d.n0);
            assert!(s.n <= prev_n);
            assert_eq!(s.t, i as f64 * cfg.dt);
            assert_eq!(s.g0, cfg.sigma_se * s.n);
            prev_n = s.n;
        }
        let a = pulse_metrics(&trace, cfg.r1, cfg.dt).unwrap();
        let b = run_metrics(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.total_out_energy <= 1.05 * d.e_stored);
    }

    #[test]
    fn sweep_of_one_matches_single_run() {
        let cfg = LaserConfig { steps: 300_000, ..Default::default() };
        let rows = sweep_energy(&cfg, &[2000e-6]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].result, run_metrics(&LaserConfig { e_in: 2000e-6, ..cfg }));
    }

    #[test]
    fn sweep_argument_errors() {
        let cfg = LaserConfig::default();
        assert!(sweep_energy(&cfg, &[]).is_err());
        assert!(sweep_energy(&cfg, &[1e-4, 0.0]).is_err());
        assert!(sweep_timestep(&cfg, &[]).unwrap().is_empty());
        assert!(sweep_timestep(&cfg, &[-1e-12]).is_err());
    }

    #[test]
    fn failed_rows_are_marked() {
        // 140 µJ inside a 20 ns window never reaches its peak.
        let cfg = LaserConfig { steps: 2_000_000, ..Default::default() };
        let rows = sweep_energy(&cfg, &[140e-6, 4000e-6]).unwrap();
        assert!(rows[0].result.is_err());
        assert!(rows[1].result.is_ok());
    }
}

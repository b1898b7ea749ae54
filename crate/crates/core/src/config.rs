//! Run configuration: flat `section.key = value` lines, `#` comments.
//!
//! ```text
//! seed = 42
//! output_dir = out
//! laser.e_in = 2e-4
//! dmft.u = 2
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::dmft::{DmftOptions, HubbardParams};
use crate::laser::{derive_params, LaserConfig};
use crate::optimizer::{GapCandidate, PipelineConfig, MAX_SPINS};
use crate::tunneling::{TunnelBarrier, ELECTRON_MASS, HBAR};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    /// 1-based; 0 for whole-file checks.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunnelSection {
    pub barrier_ev: f64,
    /// Particle energies (eV); one output row per energy and width.
    pub energies_ev: Vec<f64>,
    pub widths_m: Vec<f64>,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for TunnelSection {
    fn default() -> Self {
        Self {
            barrier_ev: 10.2,
            energies_ev: vec![0.75, 1.5],
            widths_m: vec![0.5e-9, 1.0e-9],
            mass: ELECTRON_MASS,
            hbar: HBAR,
        }
    }
}

impl TunnelSection {
    pub fn barriers(&self) -> Vec<TunnelBarrier> {
        let mut out = Vec::new();
        for &w in &self.widths_m {
            for &e in &self.energies_ev {
                let mut b = TunnelBarrier::electron_ev(self.barrier_ev, e, w);
                b.mass = self.mass;
                b.hbar = self.hbar;
                out.push(b);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Table,
    Ising,
}

impl InstanceKind {
    fn name(self) -> &'static str {
        match self {
            InstanceKind::Table => "table",
            InstanceKind::Ising => "ising",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSection {
    pub pipeline: PipelineConfig,
    /// Instance family for `optimize run`.
    pub kind: InstanceKind,
    /// Table length or spin count.
    pub size: usize,
    /// Trials per size in the scaling run.
    pub trials: usize,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self { pipeline: PipelineConfig::default(), kind: InstanceKind::Table, size: 10_000, trials: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmftSection {
    pub t: f64,
    pub u: f64,
    pub beta: f64,
    pub options: DmftOptions,
}

impl Default for DmftSection {
    fn default() -> Self {
        let p = HubbardParams::default();
        Self { t: p.t, u: p.u, beta: p.beta, options: DmftOptions::default() }
    }
}

impl DmftSection {
    pub fn params(&self) -> HubbardParams {
        HubbardParams::half_filled(self.t, self.u, self.beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub format_version: u32,
    pub laser: LaserConfig,
    pub tunnel: TunnelSection,
    pub optimize: OptimizeSection,
    pub dmft: DmftSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 42,
            format_version: FORMAT_VERSION,
            laser: LaserConfig::default(),
            tunnel: TunnelSection::default(),
            optimize: OptimizeSection::default(),
            dmft: DmftSection::default(),
        }
    }
}

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got '{v}'"))?;
    if !x.is_finite() {
        return Err(format!("expected a finite number, got '{v}'"));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got '{v}'"))
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| parse_f64(s.trim())).collect()
}

/// `gap/transition_time/stability` triples separated by `;`.
fn parse_gaps(v: &str) -> Result<Vec<GapCandidate>, String> {
    v.split(';')
        .map(|item| {
            let parts: Vec<_> = item.split('/').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(format!("expected gap/transition/stability, got '{}'", item.trim()));
            }
            Ok(GapCandidate::new(parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?))
        })
        .collect()
}

fn set_key(cfg: &mut RunConfig, key: &str, v: &str) -> Result<(), String> {
    let l = &mut cfg.laser;
    let o = &mut cfg.optimize;
    let d = &mut cfg.dmft;
    let t = &mut cfg.tunnel;
    match key {
        "output_dir" => cfg.output_dir = PathBuf::from(v),
        "seed" => cfg.seed = parse_int(v)?,
        "format_version" => cfg.format_version = parse_int(v)?,

        "laser.c" => l.c = parse_f64(v)?,
        "laser.lambda_pump" => l.lambda_pump = parse_f64(v)?,
        "laser.lambda_laser" => l.lambda_laser = parse_f64(v)?,
        "laser.r1" => l.r1 = parse_f64(v)?,
        "laser.r2" => l.r2 = parse_f64(v)?,
        "laser.beam_area" => l.beam_area = parse_f64(v)?,
        "laser.cavity_len" => l.cavity_len = parse_f64(v)?,
        "laser.gain_len" => l.gain_len = parse_f64(v)?,
        "laser.sigma_se" => l.sigma_se = parse_f64(v)?,
        "laser.dt" => l.dt = parse_f64(v)?,
        "laser.eta1" => l.eta1 = parse_f64(v)?,
        "laser.h" => l.h = parse_f64(v)?,
        "laser.e_in" => l.e_in = parse_f64(v)?,
        "laser.pump_vol" => l.pump_vol = parse_f64(v)?,
        "laser.phi0" => l.phi0 = parse_f64(v)?,
        "laser.steps" => l.steps = parse_int(v)?,
        "laser.inversion_factor" => l.inversion_factor = parse_f64(v)?,

        "tunnel.barrier_ev" => t.barrier_ev = parse_f64(v)?,
        "tunnel.energies_ev" => t.energies_ev = parse_list(v)?,
        "tunnel.widths_m" => t.widths_m = parse_list(v)?,
        "tunnel.mass" => t.mass = parse_f64(v)?,
        "tunnel.hbar" => t.hbar = parse_f64(v)?,

        "optimize.kind" => {
            o.kind = match v {
                "table" => InstanceKind::Table,
                "ising" => InstanceKind::Ising,
                _ => return Err(format!("expected 'table' or 'ising', got '{v}'")),
            }
        }
        "optimize.size" => o.size = parse_int(v)?,
        "optimize.trials" => o.trials = parse_int(v)?,
        "optimize.gap_candidates" => o.pipeline.gap_candidates = parse_gaps(v)?,
        "optimize.min_transition" => o.pipeline.min_transition = parse_f64(v)?,
        "optimize.min_stability" => o.pipeline.min_stability = parse_f64(v)?,
        "optimize.drive_energy" => o.pipeline.drive_energy = parse_f64(v)?,
        "optimize.safety" => o.pipeline.safety = parse_f64(v)?,
        "optimize.steps_per_unit" => o.pipeline.steps_per_unit = parse_f64(v)?,
        "optimize.hill_climb_seeds" => o.pipeline.hill_climb_seeds = parse_int(v)?,
        "optimize.energy_scale_ev" => o.pipeline.barrier.energy_scale_ev = parse_f64(v)?,
        "optimize.length_scale" => o.pipeline.barrier.length_scale = parse_f64(v)?,
        "optimize.particle_energy_ev" => o.pipeline.barrier.particle_energy_ev = parse_f64(v)?,

        "dmft.t" => d.t = parse_f64(v)?,
        "dmft.u" => d.u = parse_f64(v)?,
        "dmft.beta" => d.beta = parse_f64(v)?,
        "dmft.alpha" => d.options.alpha = parse_f64(v)?,
        "dmft.max_iter" => d.options.max_iter = parse_int(v)?,
        "dmft.mixing" => d.options.mixing = parse_f64(v)?,
        "dmft.n_freq" => d.options.n_freq = parse_int(v)?,
        "dmft.tau_points" => d.options.tau_points = parse_int(v)?,

        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

fn section_of(key: &str) -> &str {
    key.split_once('.').map_or("", |(s, _)| s)
}

/// Parses and validates a config file. Missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut first_line: Vec<(&str, usize)> = Vec::new();
    let mut seen: Vec<(String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| err(line_no, format!("expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(err(line_no, "missing key"));
        }
        if value.is_empty() {
            return Err(err(line_no, format!("missing value for '{key}'")));
        }
        if let Some((_, prev)) = seen.iter().find(|(k, _)| k == key) {
            return Err(err(line_no, format!("duplicate key '{key}' (first set on line {prev})")));
        }
        set_key(&mut cfg, key, value).map_err(|m| err(line_no, m))?;
        seen.push((key.to_string(), line_no));
        let section = section_of(key);
        if !first_line.iter().any(|(s, _)| *s == section) {
            first_line.push((section, line_no));
        }
    }
    validate(&cfg).map_err(|(key, m)| err(diagnostic_line(key, &m, &seen, &first_line), m))?;
    Ok(cfg)
}

/// Line of the key a validation failure refers to: the key itself, else the
/// last key of the named section mentioned in the message, else the first
/// line of that section.
fn diagnostic_line(key: &str, message: &str, seen: &[(String, usize)], first_line: &[(&str, usize)]) -> usize {
    if let Some((_, l)) = seen.iter().find(|(k, _)| k == key) {
        return *l;
    }
    let section = if key.contains('.') { section_of(key) } else { key };
    let mentioned = seen.iter().rev().find(|(k, _)| {
        k.split_once('.').is_some_and(|(s, field)| {
            s == section && message.split(|c: char| !(c.is_alphanumeric() || c == '_')).any(|w| w == field)
        })
    });
    if let Some((_, l)) = mentioned {
        return *l;
    }
    first_line.iter().find(|(s, _)| *s == section).map_or(0, |(_, l)| *l)
}

/// Constraint checks; on failure returns the offending key and a message.
fn validate(cfg: &RunConfig) -> Result<(), (&'static str, String)> {
    if cfg.format_version != FORMAT_VERSION {
        return Err(("format_version", format!("format_version must be {FORMAT_VERSION}")));
    }
    if cfg.output_dir.as_os_str().is_empty() {
        return Err(("output_dir", "output_dir is empty".into()));
    }
    cfg.laser.validate().map_err(|e| ("laser", e.to_string()))?;
    derive_params(&cfg.laser).map_err(|e| ("laser", e.to_string()))?;

    let t = &cfg.tunnel;
    if t.energies_ev.is_empty() || t.widths_m.is_empty() {
        return Err(("tunnel", "tunnel energies and widths must be non-empty".into()));
    }
    for b in t.barriers() {
        b.validate().map_err(|e| ("tunnel", e.to_string()))?;
        if b.particle_energy >= b.barrier_height {
            return Err(("tunnel", format!("particle energy {} eV is not below the barrier", b.particle_energy_ev())));
        }
    }

    let o = &cfg.optimize;
    let p = &o.pipeline;
    if o.size == 0 {
        return Err(("optimize.size", "optimize.size must be positive".into()));
    }
    if o.kind == InstanceKind::Ising && o.size > MAX_SPINS {
        return Err(("optimize.size", format!("Ising size must be at most {MAX_SPINS}")));
    }
    if o.trials == 0 {
        return Err(("optimize.trials", "optimize.trials must be positive".into()));
    }
    if p.gap_candidates.is_empty() {
        return Err(("optimize.gap_candidates", "at least one gap candidate is required".into()));
    }
    if !(p.drive_energy > 0.0) {
        return Err(("optimize.drive_energy", "drive_energy must be positive".into()));
    }
    if !(p.safety >= 1.0) {
        return Err(("optimize.safety", "safety must be at least 1".into()));
    }
    if !(p.steps_per_unit > 0.0) {
        return Err(("optimize.steps_per_unit", "steps_per_unit must be positive".into()));
    }
    let b = &p.barrier;
    if !(b.energy_scale_ev > 0.0 && b.length_scale > 0.0 && b.particle_energy_ev >= 0.0) {
        return Err(("optimize", "barrier scales must be positive".into()));
    }

    let d = &cfg.dmft;
    d.params().validate().map_err(|e| ("dmft", e.to_string()))?;
    d.options.validate().map_err(|e| ("dmft", e.to_string()))?;
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    // `{:?}` is the shortest representation that parses back to the same value.
    format!("{x:?}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(", ")
}

/// Writes every key; `parse_config(&serialize(&c)) == Ok(c)` for valid `c`.
pub fn serialize(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("format_version", cfg.format_version.to_string());
    kv("seed", cfg.seed.to_string());
    kv("output_dir", cfg.output_dir.display().to_string());

    let l = &cfg.laser;
    for (k, v) in [
        ("c", l.c),
        ("lambda_pump", l.lambda_pump),
        ("lambda_laser", l.lambda_laser),
        ("r1", l.r1),
        ("r2", l.r2),
        ("beam_area", l.beam_area),
        ("cavity_len", l.cavity_len),
        ("gain_len", l.gain_len),
        ("sigma_se", l.sigma_se),
        ("dt", l.dt),
        ("eta1", l.eta1),
        ("h", l.h),
        ("e_in", l.e_in),
        ("pump_vol", l.pump_vol),
        ("phi0", l.phi0),
        ("inversion_factor", l.inversion_factor),
    ] {
        kv(&format!("laser.{k}"), fmt_f64(v));
    }
    kv("laser.steps", l.steps.to_string());

    let t = &cfg.tunnel;
    kv("tunnel.barrier_ev", fmt_f64(t.barrier_ev));
    kv("tunnel.energies_ev", fmt_list(&t.energies_ev));
    kv("tunnel.widths_m", fmt_list(&t.widths_m));
    kv("tunnel.mass", fmt_f64(t.mass));
    kv("tunnel.hbar", fmt_f64(t.hbar));

    let o = &cfg.optimize;
    let p = &o.pipeline;
    kv("optimize.kind", o.kind.name().into());
    kv("optimize.size", o.size.to_string());
    kv("optimize.trials", o.trials.to_string());
    let gaps: Vec<String> = p
        .gap_candidates
        .iter()
        .map(|g| format!("{}/{}/{}", fmt_f64(g.gap), fmt_f64(g.transition_time), fmt_f64(g.stability)))
        .collect();
    kv("optimize.gap_candidates", gaps.join("; "));
    kv("optimize.min_transition", fmt_f64(p.min_transition));
    kv("optimize.min_stability", fmt_f64(p.min_stability));
    kv("optimize.drive_energy", fmt_f64(p.drive_energy));
    kv("optimize.safety", fmt_f64(p.safety));
    kv("optimize.steps_per_unit", fmt_f64(p.steps_per_unit));
    kv("optimize.hill_climb_seeds", p.hill_climb_seeds.to_string());
    kv("optimize.energy_scale_ev", fmt_f64(p.barrier.energy_scale_ev));
    kv("optimize.length_scale", fmt_f64(p.barrier.length_scale));
    kv("optimize.particle_energy_ev", fmt_f64(p.barrier.particle_energy_ev));

    let d = &cfg.dmft;
    kv("dmft.t", fmt_f64(d.t));
    kv("dmft.u", fmt_f64(d.u));
    kv("dmft.beta", fmt_f64(d.beta));
    kv("dmft.alpha", fmt_f64(d.options.alpha));
    kv("dmft.max_iter", d.options.max_iter.to_string());
    kv("dmft.mixing", fmt_f64(d.options.mixing));
    kv("dmft.n_freq", d.options.n_freq.to_string());
    kv("dmft.tau_points", d.options.tau_points.to_string());
    s
}

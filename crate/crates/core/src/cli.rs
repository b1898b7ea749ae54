//! `workbench` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, InstanceKind, RunConfig};
use crate::csv_out::{emit_csv, Cell, CsvError, Kind, Schema};
use crate::dmft::{final_dump, self_consistency_loop, DmftError, DmftState};
use crate::laser::{
    run_metrics, simulate_with, sweep_energy, sweep_timestep, SweepRow, TABLE3_ENERGIES, TABLE3_TIMESTEPS,
};
use crate::optimizer::{random_ising, random_table, run_pipeline, scaling_experiment, TABLE4_SIZES};
use crate::reproduce::{energy_sweep_schema, ensure_writable, reproduce, timestep_sweep_schema, ReproError, Status};
use crate::tunneling::transmission;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "workbench", version, about = "Laser kinetics, tunnelling, adiabatic search and DMFT")]
struct Cli {
    /// Config file (`section.key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output_dir`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed, overrides `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate-equation pulse simulation
    #[command(subcommand)]
    Laser(LaserCmd),
    /// Barrier transmission for every configured energy and width
    Tunnel,
    /// Adiabatic landscape search
    #[command(subcommand)]
    Optimize(OptimizeCmd),
    /// Bethe-lattice DMFT loop
    #[command(subcommand)]
    Dmft(DmftCmd),
    /// Regenerate all reference tables and the manifest
    Reproduce,
}

#[derive(Debug, Subcommand)]
enum LaserCmd {
    /// Write the pulse trace, keeping every `stride`-th sample
    Simulate {
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        stride: u64,
    },
    /// Sweep pump energy (J)
    SweepEnergy(ListArg),
    /// Sweep the time step (s) over a fixed window
    SweepDt(ListArg),
}

#[derive(Debug, Args)]
struct ListArg {
    /// Comma-separated values; defaults to the reference set
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

#[derive(Debug, Subcommand)]
enum OptimizeCmd {
    /// One pipeline run on a seeded instance
    Run,
    /// Comparisons and wall time against table size
    Scaling {
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum DmftCmd {
    /// Iterate to self-consistency
    Run,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Run(String),
}

impl From<CsvError> for Failure {
    fn from(e: CsvError) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<ReproError> for Failure {
    fn from(e: ReproError) -> Self {
        Failure::Run(e.to_string())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return EXIT_CONFIG;
        }
    };
    match dispatch(&cli.command, &cfg) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAIL
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf, Failure> {
    ensure_writable(&cfg.output_dir)?;
    Ok(cfg.output_dir.join(name))
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

/// `Ok(true)` when everything passed.
fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<bool, Failure> {
    match cmd {
        Command::Laser(LaserCmd::Simulate { stride }) => laser_simulate(cfg, *stride),
        Command::Laser(LaserCmd::SweepEnergy(list)) => {
            let values = if list.values.is_empty() { TABLE3_ENERGIES.to_vec() } else { list.values.clone() };
            let rows = sweep_energy(&cfg.laser, &values).map_err(|e| Failure::Config(e.to_string()))?;
            write_sweep(cfg, "laser_sweep_energy.csv", &energy_sweep_schema(), &rows)
        }
        Command::Laser(LaserCmd::SweepDt(list)) => {
            let values = if list.values.is_empty() { TABLE3_TIMESTEPS.to_vec() } else { list.values.clone() };
            let rows = sweep_timestep(&cfg.laser, &values).map_err(|e| Failure::Config(e.to_string()))?;
            write_sweep(cfg, "laser_sweep_dt.csv", &timestep_sweep_schema(), &rows)
        }
        Command::Tunnel => tunnel(cfg),
        Command::Optimize(OptimizeCmd::Run) => optimize_run(cfg),
        Command::Optimize(OptimizeCmd::Scaling { sizes }) => optimize_scaling(cfg, sizes),
        Command::Dmft(DmftCmd::Run) => dmft_run(cfg),
        Command::Reproduce => {
            let m = reproduce(cfg)?;
            for e in &m.entries {
                println!("{:<7} {:<5} {}  ({})", e.table, e.status, e.output_file, e.detail);
            }
            report(&cfg.output_dir.join("manifest.csv"));
            Ok(m.entries.iter().all(|e| e.status != Status::Fail))
        }
    }
}

fn laser_simulate(cfg: &RunConfig, stride: u64) -> Result<bool, Failure> {
    let path = out_path(cfg, "laser_trace.csv")?;
    let mut rows = Vec::new();
    let last = cfg.laser.steps.saturating_sub(1);
    simulate_with(&cfg.laser, |i, s| {
        if i % stride == 0 || i == last {
            rows.push(vec![s.t.into(), s.n.into(), s.phi.into(), s.e_out.into(), s.g0.into()]);
        }
    })
    .map_err(|e| Failure::Run(e.to_string()))?;
    emit_csv(&rows, &Schema::floats(&["t_s", "n_m3", "phi_m3", "eout_J", "g0"]), &path)?;
    report(&path);
    match run_metrics(&cfg.laser) {
        Ok(m) => {
            println!(
                "peak {:.6e} W at {:.6e} s, fwhm {:.6e} s, total {:.6e} J",
                m.peak_power, m.peak_time, m.fwhm_width, m.total_out_energy
            );
            Ok(true)
        }
        Err(e) => {
            eprintln!("pulse metrics: {e}");
            Ok(false)
        }
    }
}

fn write_sweep(cfg: &RunConfig, name: &str, schema: &Schema, rows: &[SweepRow]) -> Result<bool, Failure> {
    let path = out_path(cfg, name)?;
    let mut cells = Vec::new();
    let mut all_ok = true;
    for r in rows {
        match &r.result {
            Ok(m) => {
                cells.push(vec![r.value.into(), m.peak_power.into(), m.fwhm_width.into(), m.total_out_energy.into()])
            }
            Err(e) => {
                all_ok = false;
                eprintln!("row {:e} failed: {e}", r.value);
            }
        }
    }
    emit_csv(&cells, schema, &path)?;
    report(&path);
    Ok(all_ok)
}

fn tunnel(cfg: &RunConfig) -> Result<bool, Failure> {
    let path = out_path(cfg, "tunnel.csv")?;
    let mut rows = Vec::new();
    for b in cfg.tunnel.barriers() {
        let r = transmission(&b).map_err(|e| Failure::Config(e.to_string()))?;
        rows.push(vec![
            b.barrier_height_ev().into(),
            b.particle_energy_ev().into(),
            b.width.into(),
            r.k2.into(),
            r.exponent.into(),
            r.transmission.into(),
        ]);
    }
    emit_csv(&rows, &Schema::floats(&["U_eV", "E_eV", "L_m", "k2_per_m", "exponent", "T"]), &path)?;
    report(&path);
    Ok(true)
}

fn optimize_run(cfg: &RunConfig) -> Result<bool, Failure> {
    let path = out_path(cfg, "optimize_run.csv")?;
    let o = &cfg.optimize;
    let landscape = match o.kind {
        InstanceKind::Table => random_table(o.size, cfg.seed),
        InstanceKind::Ising => random_ising(o.size, cfg.seed),
    };
    let r = run_pipeline(&landscape, &o.pipeline, cfg.seed).map_err(|e| Failure::Run(e.to_string()))?;
    let schema = Schema::new(&[
        ("best_id", Kind::Int),
        ("best_energy", Kind::Float),
        ("visited", Kind::Int),
        ("comparisons", Kind::Int),
        ("escapes", Kind::Int),
        ("seed", Kind::Text),
    ]);
    let row = vec![
        Cell::Int(r.best_id as i64),
        r.best_energy.into(),
        r.visited_count.into(),
        r.comparison_count.into(),
        r.escape_count.into(),
        Cell::Text(r.seed.to_string()),
    ];
    emit_csv(&[row], &schema, &path)?;
    report(&path);
    println!("best {} energy {:.17e}", r.best_id, r.best_energy);
    for (phase, d) in &r.phase_timings {
        eprintln!("{phase:<13} {:.6} s", d.as_secs_f64());
    }
    Ok(true)
}

fn optimize_scaling(cfg: &RunConfig, sizes: &[usize]) -> Result<bool, Failure> {
    let path = out_path(cfg, "optimize_scaling.csv")?;
    let sizes = if sizes.is_empty() { TABLE4_SIZES.to_vec() } else { sizes.to_vec() };
    let rows = scaling_experiment(&sizes, cfg.optimize.trials, cfg.seed, &cfg.optimize.pipeline)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let schema = Schema::new(&[
        ("n", Kind::Int),
        ("mean_time_s", Kind::Float),
        ("mean_comparisons", Kind::Float),
        ("trials", Kind::Int),
    ]);
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| vec![r.n.into(), r.mean_time_s.into(), r.mean_comparisons.into(), r.trials.into()])
        .collect();
    emit_csv(&cells, &schema, &path)?;
    report(&path);
    Ok(rows.iter().all(|r| r.worst_bound_slack <= 0))
}

fn write_iterations(state: &DmftState, path: &Path) -> Result<(), CsvError> {
    let schema = Schema::new(&[
        ("iter", Kind::Int),
        ("residual", Kind::Float),
        ("ReG0", Kind::Float),
        ("ImG_imp_w0", Kind::Float),
        ("ImSigma_w0", Kind::Float),
    ]);
    let rows: Vec<Vec<Cell>> = state
        .history
        .iter()
        .map(|r| vec![r.iter.into(), r.residual.into(), r.re_g0.into(), r.im_g_imp_w0.into(), r.im_sigma_w0.into()])
        .collect();
    emit_csv(&rows, &schema, path)
}

fn dmft_run(cfg: &RunConfig) -> Result<bool, Failure> {
    let iter_path = out_path(cfg, "dmft_iterations.csv")?;
    let green_path = cfg.output_dir.join("dmft_green.csv");
    match self_consistency_loop(&cfg.dmft.params(), &cfg.dmft.options) {
        Ok(state) => {
            write_iterations(&state, &iter_path)?;
            let rows: Vec<Vec<Cell>> = final_dump(&state)
                .into_iter()
                .map(|(w, g, s)| vec![w.into(), g.re.into(), g.im.into(), s.re.into(), s.im.into()])
                .collect();
            emit_csv(&rows, &Schema::floats(&["wn", "ReG", "ImG", "ReSigma", "ImSigma"]), &green_path)?;
            report(&iter_path);
            report(&green_path);
            println!("converged in {} iterations, residual {:.3e}", state.iteration, state.residual);
            let _ = std::io::stdout().flush();
            Ok(true)
        }
        Err(DmftError::NonConvergence { state, .. }) => {
            write_iterations(&state, &iter_path)?;
            report(&iter_path);
            eprintln!("no convergence after {} iterations (residual {:.3e})", state.iteration, state.residual);
            Ok(false)
        }
        Err(e @ (DmftError::InvalidParams(_) | DmftError::NotHalfFilled { .. })) => Err(Failure::Config(e.to_string())),
        Err(e) => Err(Failure::Run(e.to_string())),
    }
}

//! Python bindings for the workbench core.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use workbench_core::config;
use workbench_core::dmft::{self, DmftError, DmftOptions, HubbardParams};
use workbench_core::laser;
use workbench_core::optimizer::{self, IsingSpec, Landscape, PipelineConfig};
use workbench_core::reproduce;
use workbench_core::tunneling::{self, TunnelBarrier};

type TraceRow = (f64, f64, f64, f64, f64);
type SweepRow = (f64, Option<(f64, f64)>);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Rate-equation laser parameters. Keyword arguments override the reference
/// dye-laser constants.
#[pyclass(name = "LaserConfig", from_py_object)]
#[derive(Clone)]
struct PyLaserConfig {
    inner: laser::LaserConfig,
}

#[pymethods]
impl PyLaserConfig {
    #[new]
    #[pyo3(signature = (e_in=None, dt=None, steps=None, r1=None, inversion_factor=None))]
    fn new(
        e_in: Option<f64>,
        dt: Option<f64>,
        steps: Option<u64>,
        r1: Option<f64>,
        inversion_factor: Option<f64>,
    ) -> PyResult<Self> {
        let mut c = laser::LaserConfig::default();
        if let Some(v) = e_in {
            c.e_in = v;
        }
        if let Some(v) = dt {
            c.dt = v;
        }
        if let Some(v) = steps {
            c.steps = v;
        }
        if let Some(v) = r1 {
            c.r1 = v;
        }
        if let Some(v) = inversion_factor {
            c.inversion_factor = v;
        }
        c.validate().map_err(value_err)?;
        Ok(Self { inner: c })
    }

    #[getter]
    fn e_in(&self) -> f64 {
        self.inner.e_in
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.inner.steps
    }

    /// Derived quantities as a dict.
    fn derive<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = laser::derive_params(&self.inner).map_err(value_err)?;
        let out = PyDict::new(py);
        out.set_item("eta3", d.eta3)?;
        out.set_item("e_pump_photon", d.e_pump_photon)?;
        out.set_item("e_laser_photon", d.e_laser_photon)?;
        out.set_item("e_stored", d.e_stored)?;
        out.set_item("n0", d.n0)?;
        out.set_item("loss_rate", d.loss_rate)?;
        out.set_item("t_round", d.t_round)?;
        Ok(out)
    }

    /// `(peak_power, peak_time, fwhm_width, total_out_energy)`.
    fn metrics(&self, py: Python<'_>) -> PyResult<(f64, f64, f64, f64)> {
        let cfg = self.inner;
        let m = py.detach(|| laser::run_metrics(&cfg)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok((m.peak_power, m.peak_time, m.fwhm_width, m.total_out_energy))
    }

    /// Every `stride`-th `(t, n, phi, e_out, g0)` sample.
    #[pyo3(signature = (stride=1000))]
    fn simulate(&self, py: Python<'_>, stride: u64) -> PyResult<Vec<TraceRow>> {
        if stride == 0 {
            return Err(PyValueError::new_err("stride must be positive"));
        }
        let cfg = self.inner;
        py.detach(|| {
            let mut rows = Vec::new();
            laser::simulate_with(&cfg, |i, s| {
                if i % stride == 0 {
                    rows.push((s.t, s.n, s.phi, s.e_out, s.g0));
                }
            })
            .map(|_| rows)
        })
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("LaserConfig(e_in={:e}, dt={:e}, steps={})", self.inner.e_in, self.inner.dt, self.inner.steps)
    }
}

/// Pump-energy sweep; failed rows come back as `None`.
#[pyfunction]
fn sweep_energy(py: Python<'_>, cfg: PyLaserConfig, energies: Vec<f64>) -> PyResult<Vec<SweepRow>> {
    let rows = py.detach(|| laser::sweep_energy(&cfg.inner, &energies)).map_err(value_err)?;
    Ok(rows.into_iter().map(|r| (r.value, r.result.ok().map(|m| (m.peak_power, m.fwhm_width)))).collect())
}

/// `(k2, exponent, T)` for an electron at `energy_ev` under a `barrier_ev` barrier of width `width_m`.
#[pyfunction]
fn transmission(barrier_ev: f64, energy_ev: f64, width_m: f64) -> PyResult<(f64, f64, f64)> {
    let r = tunneling::transmission(&TunnelBarrier::electron_ev(barrier_ev, energy_ev, width_m)).map_err(value_err)?;
    Ok((r.k2, r.exponent, r.transmission))
}

#[pyfunction]
fn barrier_height_bohr(z_eff: f64, n1: u32, n2: u32) -> PyResult<f64> {
    tunneling::barrier_height_bohr(z_eff, n1, n2).map_err(value_err)
}

fn report_dict<'py>(py: Python<'py>, r: &optimizer::OptimizerReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("best_id", r.best_id)?;
    d.set_item("best_energy", r.best_energy)?;
    d.set_item("visited", r.visited_count)?;
    d.set_item("comparisons", r.comparison_count)?;
    d.set_item("escapes", r.escape_count)?;
    d.set_item("candidates", r.candidate_count)?;
    d.set_item("seed", r.seed)?;
    Ok(d)
}

/// Runs the full search pipeline over an explicit energy table.
#[pyfunction]
#[pyo3(signature = (energies, seed=42, safety=1.0))]
fn optimize_table<'py>(py: Python<'py>, energies: Vec<f64>, seed: u64, safety: f64) -> PyResult<Bound<'py, PyDict>> {
    let cfg = PipelineConfig { safety, ..PipelineConfig::default() };
    let r = py.detach(|| optimizer::run_pipeline(&Landscape::Table(energies), &cfg, seed)).map_err(value_err)?;
    report_dict(py, &r)
}

/// Runs the pipeline on an Ising model given `(i, j, J_ij)` couplings.
#[pyfunction]
#[pyo3(signature = (sites, couplings, seed=42, transverse_field=1.0))]
fn optimize_ising<'py>(
    py: Python<'py>,
    sites: usize,
    couplings: Vec<(usize, usize, f64)>,
    seed: u64,
    transverse_field: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let land = Landscape::Ising(IsingSpec { sites, couplings, transverse_field });
    let r = py.detach(|| optimizer::run_pipeline(&land, &PipelineConfig::default(), seed)).map_err(value_err)?;
    report_dict(py, &r)
}

/// `tau = safety * E / g^2`.
#[pyfunction]
#[pyo3(signature = (gap, drive_energy, safety=1.0))]
fn schedule_time(gap: f64, drive_energy: f64, safety: f64) -> PyResult<f64> {
    let wg = optimizer::WorkingGap { candidates: vec![optimizer::GapCandidate::new(gap, 1.0, 1.0)], chosen: 0 };
    Ok(optimizer::map_schedule(&wg, drive_energy, safety).map_err(value_err)?.total_time)
}

/// Half-filled Bethe-lattice DMFT. Returns a dict with the frequency grid,
/// `g_imp`, `sigma` (complex lists) and the residual history.
#[pyfunction]
#[pyo3(signature = (u, t=1.0, beta=16.0, alpha=1e-6, max_iter=200, mixing=0.7, n_freq=512))]
#[allow(clippy::too_many_arguments)]
fn dmft_loop<'py>(
    py: Python<'py>,
    u: f64,
    t: f64,
    beta: f64,
    alpha: f64,
    max_iter: usize,
    mixing: f64,
    n_freq: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let p = HubbardParams::half_filled(t, u, beta);
    let opts = DmftOptions { alpha, max_iter, mixing, n_freq, tau_points: 0 };
    let state = match py.detach(|| dmft::self_consistency_loop(&p, &opts)) {
        Ok(s) => s,
        Err(DmftError::NonConvergence { history, .. }) => {
            return Err(PyRuntimeError::new_err(format!(
                "no convergence after {} iterations (last residual {:e})",
                history.len(),
                history.last().copied().unwrap_or(f64::NAN)
            )))
        }
        Err(e) => return Err(value_err(e)),
    };
    let d = PyDict::new(py);
    d.set_item("wn", state.g_imp.frequencies())?;
    d.set_item("g_imp", state.g_imp.values.clone())?;
    d.set_item("sigma", state.sigma.values.clone())?;
    d.set_item("residuals", state.residuals())?;
    d.set_item("iterations", state.iteration)?;
    Ok(d)
}

#[pyfunction]
fn semicircle_green(w: f64, half_bandwidth: f64) -> Complex64 {
    dmft::semicircle_hilbert(Complex64::new(0.0, w), half_bandwidth)
}

/// Validates config text and returns its canonical form.
#[pyfunction]
fn normalize_config(text: &str) -> PyResult<String> {
    let c = config::parse_config(text).map_err(value_err)?;
    Ok(config::serialize(&c))
}

/// Regenerates all tables under `output_dir`; returns `(table, file, status)` rows.
#[pyfunction]
#[pyo3(signature = (output_dir, seed=42))]
fn reproduce_tables(
    py: Python<'_>,
    output_dir: std::path::PathBuf,
    seed: u64,
) -> PyResult<Vec<(String, String, String)>> {
    let cfg = config::RunConfig { output_dir, seed, ..config::RunConfig::default() };
    let m = py.detach(|| reproduce::reproduce(&cfg)).map_err(|e| PyIOError::new_err(e.to_string()))?;
    Ok(m.entries.into_iter().map(|e| (e.table.to_string(), e.output_file, e.status.to_string())).collect())
}

#[pymodule]
fn workbench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLaserConfig>()?;
    m.add_function(wrap_pyfunction!(sweep_energy, m)?)?;
    m.add_function(wrap_pyfunction!(transmission, m)?)?;
    m.add_function(wrap_pyfunction!(barrier_height_bohr, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_table, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_ising, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_time, m)?)?;
    m.add_function(wrap_pyfunction!(dmft_loop, m)?)?;
    m.add_function(wrap_pyfunction!(semicircle_green, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_config, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_tables, m)?)?;
    Ok(())
}

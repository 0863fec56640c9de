//! Python module `chve`: configs, simulations, diagnostics and the
//! verification suite.

use std::path::PathBuf;

use chve_core::diagnostics::{total_energy, total_mass, DiagnosticsRow};
use chve_core::driver::config::ConfigSpec;
use chve_core::driver::io::{energy_report, read_diagnostics};
use chve_core::driver::{run_simulation, Simulation as CoreSimulation, Termination};
use chve_core::verification::{run_suite, stokes_mms as core_stokes_mms, Suite};
use chve_core::{Error, GridSpec};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Staggered grid geometry.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGrid {
    inner: GridSpec,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (nx, ny, lx = 1.0, ly = 1.0))]
    fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> PyResult<Self> {
        Ok(Self { inner: GridSpec::new(nx, ny, lx, ly).map_err(to_py)? })
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny
    }

    #[getter]
    fn lx(&self) -> f64 {
        self.inner.lx
    }

    #[getter]
    fn ly(&self) -> f64 {
        self.inner.ly
    }

    #[getter]
    fn hx(&self) -> f64 {
        self.inner.hx()
    }

    #[getter]
    fn hy(&self) -> f64 {
        self.inner.hy()
    }

    fn __repr__(&self) -> String {
        let g = self.inner;
        format!("Grid(nx={}, ny={}, lx={}, ly={})", g.nx, g.ny, g.lx, g.ly)
    }
}

/// A validated run configuration.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: ConfigSpec,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: ConfigSpec::from_file(&path).map_err(to_py)? })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ConfigSpec::parse(text).map_err(to_py)? })
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid }
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.time.t_end
    }

    #[setter]
    fn set_t_end(&mut self, t: f64) {
        self.inner.time.t_end = t;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.initial.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.initial.seed = seed;
    }

    #[getter]
    fn output_dir(&self) -> PathBuf {
        self.inner.output.dir.clone()
    }

    #[setter]
    fn set_output_dir(&mut self, dir: PathBuf) {
        self.inner.output.dir = dir;
    }

    #[getter]
    fn max_steps(&self) -> Option<u64> {
        self.inner.time.max_steps
    }

    #[setter]
    fn set_max_steps(&mut self, steps: Option<u64>) {
        self.inner.time.max_steps = steps;
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.params.eps
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.params.nu
    }

    #[getter]
    fn picard_max(&self) -> u32 {
        self.inner.coupling.picard_max
    }

    #[setter]
    fn set_picard_max(&mut self, n: u32) {
        self.inner.coupling.picard_max = n;
    }
}

/// One line of the diagnostics stream.
#[pyclass(name = "DiagnosticsRow", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyRow {
    step: u64,
    t: f64,
    dt: f64,
    e_total: f64,
    e_elastic: f64,
    e_interface: f64,
    e_bulk: f64,
    dissipation: f64,
    mass: f64,
    div_v_max: f64,
    picard_iters: usize,
    newton_iters: usize,
    budget_residual: f64,
}

#[pymethods]
impl PyRow {
    fn to_csv(&self) -> String {
        DiagnosticsRow::from(self).to_csv()
    }

    fn __repr__(&self) -> String {
        format!("DiagnosticsRow(step={}, t={:e}, E_total={:e}, mass={:e})", self.step, self.t, self.e_total, self.mass)
    }
}

impl From<&DiagnosticsRow> for PyRow {
    fn from(r: &DiagnosticsRow) -> Self {
        Self {
            step: r.step,
            t: r.t,
            dt: r.dt,
            e_total: r.energy.total,
            e_elastic: r.energy.elastic,
            e_interface: r.energy.interface,
            e_bulk: r.energy.bulk,
            dissipation: r.dissipation,
            mass: r.mass,
            div_v_max: r.div_v_max,
            picard_iters: r.picard_iters,
            newton_iters: r.newton_iters,
            budget_residual: r.budget_residual,
        }
    }
}

impl From<&PyRow> for DiagnosticsRow {
    fn from(r: &PyRow) -> Self {
        Self {
            step: r.step,
            t: r.t,
            dt: r.dt,
            energy: chve_core::diagnostics::EnergyBreakdown {
                total: r.e_total,
                elastic: r.e_elastic,
                interface: r.e_interface,
                bulk: r.e_bulk,
            },
            dissipation: r.dissipation,
            mass: r.mass,
            div_v_max: r.div_v_max,
            picard_iters: r.picard_iters,
            newton_iters: r.newton_iters,
            budget_residual: r.budget_residual,
        }
    }
}

/// An in-memory run that can be stepped from Python.
#[pyclass(name = "Simulation", unsendable)]
pub struct PySimulation {
    inner: CoreSimulation,
}

#[pymethods]
impl PySimulation {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        Ok(Self { inner: CoreSimulation::new(&config.inner).map_err(to_py)? })
    }

    /// Diagnostics of the current state.
    fn current(&self) -> PyRow {
        PyRow::from(&self.inner.current_row())
    }

    /// Takes one accepted step.
    fn advance(&mut self) -> PyResult<PyRow> {
        Ok(PyRow::from(&self.inner.advance().map_err(to_py)?))
    }

    /// Runs to the end time (or `max_steps` steps), returning every row
    /// including the starting one.
    #[pyo3(signature = (max_steps = None))]
    fn run(&mut self, max_steps: Option<u64>) -> PyResult<Vec<PyRow>> {
        let rows = self.inner.run_in_memory(max_steps).map_err(to_py)?;
        Ok(rows.iter().map(PyRow::from).collect())
    }

    #[getter]
    fn finished(&self) -> bool {
        self.inner.is_finished()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.state().t
    }

    #[getter]
    fn step(&self) -> u64 {
        self.inner.state().step_index
    }

    /// Phase field, row-major over cells (`j * nx + i`).
    fn phi(&self) -> Vec<f64> {
        self.inner.state().phi.values.clone()
    }

    fn mu(&self) -> Vec<f64> {
        self.inner.state().mu.values.clone()
    }

    fn pressure(&self) -> Vec<f64> {
        self.inner.state().q.values.clone()
    }

    /// Face velocities `(u, w)` on the x- and y-faces.
    fn velocity(&self) -> (Vec<f64>, Vec<f64>) {
        let v = &self.inner.state().v;
        (v.u.clone(), v.w.clone())
    }

    /// Deformation gradient components `(F_xx, F_xy, F_yx, F_yy)` per cell.
    fn deformation(&self) -> Vec<Vec<f64>> {
        self.inner.state().f.comps.clone()
    }

    fn energy(&self) -> f64 {
        let s = self.inner.state();
        total_energy(&s.phi, &s.f, &self.inner.config().params).total
    }

    fn mass(&self) -> f64 {
        total_mass(&self.inner.state().phi)
    }
}

/// Summary of a completed `run`.
#[pyclass(name = "RunSummary", frozen, get_all)]
pub struct PyRunSummary {
    steps: u64,
    rejected: u64,
    wall_time: f64,
    final_energy: f64,
    final_mass: f64,
    final_t: f64,
    termination: String,
}

type MmsRow = (usize, f64, f64, f64);
type EnergySummary = (usize, f64, f64, f64, usize, f64, f64, f64);

/// Runs a config with file output, like `chve run`.
#[pyfunction]
fn run(config: &PyConfig) -> PyResult<PyRunSummary> {
    let s = run_simulation(&config.inner).map_err(to_py)?;
    let termination = match s.termination {
        Termination::Completed => "completed".to_string(),
        Termination::MaxSteps => "max_steps".to_string(),
        Termination::Failed(msg) => format!("failed: {msg}"),
    };
    Ok(PyRunSummary {
        steps: s.steps,
        rejected: s.rejected,
        wall_time: s.wall_time,
        final_energy: s.final_energy,
        final_mass: s.final_mass,
        final_t: s.final_t,
        termination,
    })
}

/// Runs a verification suite; returns `(name, passed, detail)` triples.
#[pyfunction]
#[pyo3(signature = (suite = "quick"))]
fn verify(suite: &str) -> PyResult<Vec<(String, bool, String)>> {
    let suite: Suite = suite.parse().map_err(|e: String| PyValueError::new_err(e))?;
    Ok(run_suite(suite).into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

/// Manufactured-solution Stokes study; returns `(rows, velocity_orders)`
/// with rows `(n, velocity_l2, pressure_l2, div_max)`.
#[pyfunction]
#[pyo3(signature = (levels = vec![32, 64, 128], nu = 1.0))]
fn stokes_mms(levels: Vec<usize>, nu: f64) -> PyResult<(Vec<MmsRow>, Vec<f64>)> {
    let r = core_stokes_mms(&levels, nu).map_err(to_py)?;
    let rows = r.rows.iter().map(|w| (w.n, w.velocity_l2, w.pressure_l2, w.div_max)).collect();
    Ok((rows, r.velocity_orders))
}

/// Reads a diagnostics CSV.
#[pyfunction]
fn read_csv(path: PathBuf) -> PyResult<Vec<PyRow>> {
    Ok(read_diagnostics(&path).map_err(to_py)?.iter().map(PyRow::from).collect())
}

/// `(rows, E_initial, E_final, max_increase, increases, mass_drift, max_div,
/// mean_abs_budget)` for a diagnostics CSV.
#[pyfunction]
fn energy_summary(path: PathBuf) -> PyResult<EnergySummary> {
    let rows = read_diagnostics(&path).map_err(to_py)?;
    let r = energy_report(&rows).ok_or_else(|| PyValueError::new_err("no diagnostics rows"))?;
    Ok((r.rows, r.e_initial, r.e_final, r.max_increase, r.increases, r.mass_drift, r.max_div, r.mean_abs_budget))
}

#[pymodule]
fn chve(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRow>()?;
    m.add_class::<PySimulation>()?;
    m.add_class::<PyRunSummary>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(stokes_mms, m)?)?;
    m.add_function(wrap_pyfunction!(read_csv, m)?)?;
    m.add_function(wrap_pyfunction!(energy_summary, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_conversion_round_trips() {
        let row = DiagnosticsRow {
            step: 4,
            t: 0.25,
            dt: 1e-3,
            energy: chve_core::diagnostics::EnergyBreakdown { total: 3.0, elastic: 1.0, interface: 0.5, bulk: 1.5 },
            dissipation: 0.1,
            mass: -0.2,
            div_v_max: 1e-16,
            picard_iters: 2,
            newton_iters: 5,
            budget_residual: 1e-4,
        };
        assert_eq!(DiagnosticsRow::from(&PyRow::from(&row)), row);
    }
}

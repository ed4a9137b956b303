//! Python bindings. Matrices are lists of rows; results come back as plain dicts and lists.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;
use tdstab::feedback::{self, Plant};
use tdstab::quasipoly::{char_function, crossing_sweep, default_omega_max, DirectionMethod, TimeDelaySystem};
use tdstab::simulate::{integrate, settling_time, HistoryFunction};
use tdstab::{invariant, pipeline, AnalysisConfig, RealMatrix, ToleranceConfig};

create_exception!(tdstab_py, TdstabError, PyException);
create_exception!(tdstab_py, ValidationError, TdstabError);
create_exception!(tdstab_py, DegenerateCrossingError, TdstabError);

fn err(e: tdstab::Error) -> PyErr {
    use tdstab::Error as E;
    match e {
        E::DimensionMismatch(_) | E::InvalidInput(_) | E::StepTooLarge { .. } => ValidationError::new_err(e.to_string()),
        E::DegenerateCrossing { .. } => DegenerateCrossingError::new_err(e.to_string()),
        _ => TdstabError::new_err(e.to_string()),
    }
}

type Rows = Vec<Vec<f64>>;

fn matrix(rows: &Rows) -> PyResult<RealMatrix> {
    RealMatrix::from_rows(rows).map_err(err)
}

fn single_delay(a1: &Rows, a2: &Rows) -> PyResult<TimeDelaySystem> {
    TimeDelaySystem::single_delay(matrix(a1)?, matrix(a2)?).map_err(err)
}

fn plant(a0: &Rows, a1: &Rows, h: f64, b: &Rows) -> PyResult<Plant> {
    Plant::new(matrix(a0)?, matrix(a1)?, h, matrix(b)?).map_err(err)
}

fn config(omega_max: Option<f64>, grid_points: Option<usize>) -> AnalysisConfig {
    let mut cfg = AnalysisConfig { omega_max, ..AnalysisConfig::default() };
    if let Some(g) = grid_points {
        cfg.grid_points = g;
    }
    cfg
}

/// Round-trips through the standard `json` module to build native Python objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| TdstabError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Stability map of `x' = A1 x + A2 x(t - tau)` on [0, tau_max], decomposing on degenerate crossings.
#[pyfunction]
#[pyo3(signature = (a1, a2, tau_max, decompose = true, omega_max = None, grid_points = None))]
fn stability(
    py: Python<'_>,
    a1: Rows,
    a2: Rows,
    tau_max: f64,
    decompose: bool,
    omega_max: Option<f64>,
    grid_points: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let sys = single_delay(&a1, &a2)?;
    let rep = py.detach(|| pipeline::analyze_stability(&sys, tau_max, &config(omega_max, grid_points), decompose)).map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (a1, a2, omega_max = None, grid_points = 2000))]
fn crossings(py: Python<'_>, a1: Rows, a2: Rows, omega_max: Option<f64>, grid_points: usize) -> PyResult<Py<PyAny>> {
    let f = char_function(&single_delay(&a1, &a2)?).map_err(err)?;
    let w = omega_max.unwrap_or_else(|| default_omega_max(&f));
    to_py(py, &crossing_sweep(&f, w, grid_points).map_err(err)?)
}

#[pyfunction]
fn decompose(py: Python<'_>, a1: Rows, a2: Rows) -> PyResult<Py<PyAny>> {
    let (d, blocks) = invariant::decompose_system(&single_delay(&a1, &a2)?, &ToleranceConfig::default()).map_err(err)?;
    to_py(py, &serde_json::json!({ "decomposition": d, "blocks": blocks }))
}

/// Rightmost characteristic roots at a fixed delay, sorted by real part.
#[pyfunction]
#[pyo3(signature = (a1, a2, tau, nodes = 40))]
fn rightmost_roots(a1: Rows, a2: Rows, tau: f64, nodes: usize) -> PyResult<Vec<Complex64>> {
    let set = tdstab::quasipoly::rightmost_roots(&single_delay(&a1, &a2)?, tau, nodes).map_err(err)?;
    Ok(set.roots)
}

#[pyfunction]
fn place_pole_pair(py: Python<'_>, a0: Rows, a1: Rows, h: f64, b: Rows, tau: f64, pole: Complex64) -> PyResult<Py<PyAny>> {
    to_py(py, &feedback::place_pole_pair(&plant(&a0, &a1, h, &b)?, tau, pole).map_err(err)?)
}

/// Stable delay intervals of the delayed-feedback loop; `method` is "root_tendency" or "direct".
#[pyfunction]
#[pyo3(signature = (a0, a1, h, b, k, tau_max, method = "root_tendency"))]
#[allow(clippy::too_many_arguments)]
fn stabilizing_intervals(
    py: Python<'_>,
    a0: Rows,
    a1: Rows,
    h: f64,
    b: Rows,
    k: Vec<f64>,
    tau_max: f64,
    method: &str,
) -> PyResult<Py<PyAny>> {
    let method = match method {
        "root_tendency" => DirectionMethod::RootTendency,
        "direct" => DirectionMethod::Direct,
        other => return Err(ValidationError::new_err(format!("unknown method `{other}`"))),
    };
    let p = plant(&a0, &a1, h, &b)?;
    let (design, map) =
        py.detach(|| feedback::stabilizing_intervals_with(&p, &k, tau_max, &AnalysisConfig::default(), method)).map_err(err)?;
    to_py(py, &serde_json::json!({ "design": design, "map": map }))
}

#[pyfunction]
fn is_controllable(a0: Rows, a1: Rows, b: Rows) -> PyResult<bool> {
    feedback::is_controllable(&matrix(&a0)?, &matrix(&a1)?, &matrix(&b)?, &ToleranceConfig::default()).map_err(err)
}

fn run_simulation(py: Python<'_>, sys: &TimeDelaySystem, tau: f64, history: Vec<f64>, t_end: f64, dt: Option<f64>, band: f64) -> PyResult<Py<PyAny>> {
    let traj = integrate(sys, tau, &HistoryFunction::constant(history), t_end, dt).map_err(err)?;
    let settled = settling_time(&traj, band, None).map_err(err)?;
    to_py(py, &serde_json::json!({ "dt": traj.dt, "times": traj.times, "states": traj.states, "settling_time": settled }))
}

/// Fixed-step RK4 run of `x' = A1 x + A2 x(t - tau)` from a constant history.
#[pyfunction]
#[pyo3(signature = (a1, a2, tau, history, t_end, dt = None, band = 0.02))]
#[allow(clippy::too_many_arguments)]
fn simulate(py: Python<'_>, a1: Rows, a2: Rows, tau: f64, history: Vec<f64>, t_end: f64, dt: Option<f64>, band: f64) -> PyResult<Py<PyAny>> {
    run_simulation(py, &single_delay(&a1, &a2)?, tau, history, t_end, dt, band)
}

/// Like `simulate`, for the plant under the feedback `u = -K (x(t) - x(t - tau))`.
#[pyfunction]
#[pyo3(signature = (a0, a1, h, b, k, tau, history, t_end, dt = None, band = 0.02))]
#[allow(clippy::too_many_arguments)]
fn simulate_closed_loop(
    py: Python<'_>,
    a0: Rows,
    a1: Rows,
    h: f64,
    b: Rows,
    k: Vec<f64>,
    tau: f64,
    history: Vec<f64>,
    t_end: f64,
    dt: Option<f64>,
    band: f64,
) -> PyResult<Py<PyAny>> {
    let sys = feedback::closed_loop_system(&plant(&a0, &a1, h, &b)?, &k).map_err(err)?;
    run_simulation(py, &sys, tau, history, t_end, dt, band)
}

#[pymodule]
pub fn tdstab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("TdstabError", py.get_type::<TdstabError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("DegenerateCrossingError", py.get_type::<DegenerateCrossingError>())?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(crossings, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(rightmost_roots, m)?)?;
    m.add_function(wrap_pyfunction!(place_pole_pair, m)?)?;
    m.add_function(wrap_pyfunction!(stabilizing_intervals, m)?)?;
    m.add_function(wrap_pyfunction!(is_controllable, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_closed_loop, m)?)?;
    Ok(())
}

//! Python bindings. Structured results cross the boundary as JSON and come
//! out as plain dicts and lists.

use effortdyn_core::dynamics::{self, ClassifyOptions};
use effortdyn_core::{bifurcation, optimal, Figure, ModelParams, SysState, Tolerances};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(effortdyn, ModelError, PyValueError, "Raised when the model library rejects a request.");

fn model_err(e: effortdyn_core::Error) -> PyErr {
    ModelError::new_err(e.to_string())
}

fn to_python<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Model parameters. Keyword arguments override the chosen preset, or the
/// Figure-4 set when no preset is named.
#[pyclass(name = "ModelParams", module = "effortdyn", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    a: f64,
    e: f64,
    d: f64,
    q: f64,
    m: f64,
    m1: f64,
    m2: f64,
    p: f64,
    c: f64,
    rho: f64,
    delta: f64,
}

impl From<ModelParams> for PyParams {
    fn from(p: ModelParams) -> Self {
        let ModelParams { a, e, d, q, m, m1, m2, p, c, rho, delta } = p;
        Self { a, e, d, q, m, m1, m2, p, c, rho, delta }
    }
}

impl PyParams {
    fn model(&self) -> ModelParams {
        let &PyParams { a, e, d, q, m, m1, m2, p, c, rho, delta } = self;
        ModelParams { a, e, d, q, m, m1, m2, p, c, rho, delta }
    }
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (preset = None, **overrides))]
    fn new(preset: Option<&str>, overrides: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let figure = match preset {
            Some(name) => Figure::from_name(name)
                .ok_or_else(|| PyValueError::new_err(format!("unknown preset `{name}`")))?,
            None => Figure::Four,
        };
        let mut inner = figure.params();
        if let Some(kw) = overrides {
            for (key, value) in kw.iter() {
                let key: String = key.extract()?;
                let value: f64 = value.extract()?;
                let slot = match key.as_str() {
                    "a" => &mut inner.a,
                    "e" => &mut inner.e,
                    "d" => &mut inner.d,
                    "q" => &mut inner.q,
                    "m" => &mut inner.m,
                    "m1" => &mut inner.m1,
                    "m2" => &mut inner.m2,
                    "p" => &mut inner.p,
                    "c" => &mut inner.c,
                    "rho" => &mut inner.rho,
                    "delta" => &mut inner.delta,
                    other => return Err(PyValueError::new_err(format!("unknown parameter `{other}`"))),
                };
                *slot = value;
            }
        }
        inner.validate().map_err(model_err)?;
        Ok(inner.into())
    }

    /// Copy with a different harvested fraction.
    fn with_m(&self, m: f64) -> PyResult<Self> {
        let inner = self.model().with_m(m);
        inner.validate().map_err(model_err)?;
        Ok(inner.into())
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_python(py, &self.model())
    }

    fn __repr__(&self) -> String {
        let p = self.model();
        format!(
            "ModelParams(a={}, e={}, d={}, q={}, m={}, m1={}, m2={}, p={}, c={}, rho={}, delta={})",
            p.a, p.e, p.d, p.q, p.m, p.m1, p.m2, p.p, p.c, p.rho, p.delta
        )
    }
}

fn state(s: (f64, f64, f64)) -> SysState {
    SysState::new(s.0, s.1, s.2)
}

fn tolerances(abs_tol: f64, rel_tol: f64, max_step: f64) -> Tolerances {
    Tolerances::default().with_tol(abs_tol, rel_tol).with_max_step(max_step)
}

/// All equilibria with existence verdicts and condition traces.
#[pyfunction]
fn equilibria(py: Python<'_>, params: PyRef<'_, PyParams>) -> PyResult<Py<PyAny>> {
    to_python(py, &effortdyn_core::equilibria::all_equilibria(&params.model()))
}

/// Stability verdicts of E0, E1, E2 and E3 (those that exist).
#[pyfunction]
fn stability(py: Python<'_>, params: PyRef<'_, PyParams>) -> PyResult<Py<PyAny>> {
    to_python(py, &effortdyn_core::stability::classify_all(&params.model()).map_err(model_err)?)
}

#[pyfunction]
fn persistence_check(py: Python<'_>, params: PyRef<'_, PyParams>) -> PyResult<Py<PyAny>> {
    to_python(py, &effortdyn_core::stability::persistence_check(&params.model()))
}

#[pyfunction]
#[pyo3(signature = (params, m_lo = 0.0, m_hi = 1.0, steps = 400))]
fn hopf_scan(py: Python<'_>, params: PyRef<'_, PyParams>, m_lo: f64, m_hi: f64, steps: usize) -> PyResult<Py<PyAny>> {
    let result = bifurcation::hopf_scan(&params.model(), m_lo, m_hi, steps).map_err(model_err)?;
    to_python(py, &result)
}

/// Region label (`"I"` … `"VI"` or `"none"`) at cost `c` and death rate `d`.
#[pyfunction]
fn region_classify(params: PyRef<'_, PyParams>, c: f64, d: f64) -> PyResult<String> {
    Ok(bifurcation::region_classify(&params.model(), c, d).map_err(model_err)?.label.to_string())
}

#[pyfunction]
fn region_grid(
    py: Python<'_>,
    params: PyRef<'_, PyParams>,
    c_range: (f64, f64),
    d_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> PyResult<Py<PyAny>> {
    let p = params.model();
    let grid = py
        .detach(|| bifurcation::region_grid(&p, c_range, d_range, nx, ny))
        .map_err(model_err)?;
    to_python(py, &grid)
}

type TrajectoryParts = (Vec<f64>, Vec<(f64, f64, f64)>, Py<PyAny>);

/// Integrates from `initial = (x, y, E)`; returns `(times, states, meta)`.
#[pyfunction]
#[pyo3(signature = (params, initial, t_end, abs_tol = 1e-10, rel_tol = 1e-8, max_step = 1.0))]
fn integrate(
    py: Python<'_>,
    params: PyRef<'_, PyParams>,
    initial: (f64, f64, f64),
    t_end: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_step: f64,
) -> PyResult<TrajectoryParts> {
    let p = params.model();
    let traj = py
        .detach(|| dynamics::integrate(&p, state(initial), t_end, &tolerances(abs_tol, rel_tol, max_step)))
        .map_err(model_err)?;
    let states = traj.states.iter().map(|s| (s.x, s.y, s.effort)).collect();
    let meta = to_python(py, &traj.meta)?;
    Ok((traj.times, states, meta))
}

/// Integrates and names the attractor reached.
#[pyfunction]
#[pyo3(signature = (params, initial, t_end, match_radius = 1e-3))]
fn classify_attractor(
    py: Python<'_>,
    params: PyRef<'_, PyParams>,
    initial: (f64, f64, f64),
    t_end: f64,
    match_radius: f64,
) -> PyResult<Py<PyAny>> {
    let p = params.model();
    let opts = ClassifyOptions {
        match_radius,
        ..ClassifyOptions::default()
    };
    let verdict = py
        .detach(|| {
            dynamics::integrate(&p, state(initial), t_end, &Tolerances::default())
                .map(|traj| dynamics::classify_attractor(&p, &traj, &opts))
        })
        .map_err(model_err)?;
    to_python(py, &verdict)
}

#[pyfunction]
#[pyo3(signature = (params, bounds, n = 32, t_end = 1000.0, seed = 0))]
fn basin_sample(
    py: Python<'_>,
    params: PyRef<'_, PyParams>,
    bounds: [(f64, f64); 3],
    n: usize,
    t_end: f64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let p = params.model();
    let report = py
        .detach(|| {
            dynamics::basin_sample(&p, bounds, n, t_end, seed, &Tolerances::default(), &ClassifyOptions::default())
        })
        .map_err(model_err)?;
    to_python(py, &report)
}

/// Steady-state optimal harvesting fraction; needs `delta > 0`.
#[pyfunction]
#[pyo3(signature = (params, bracket = (0.34, 1.0)))]
fn optimal_m(py: Python<'_>, params: PyRef<'_, PyParams>, bracket: (f64, f64)) -> PyResult<Py<PyAny>> {
    to_python(py, &optimal::optimal_m(&params.model(), bracket).map_err(model_err)?)
}

#[pymodule]
fn effortdyn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ModelError", m.py().get_type::<ModelError>())?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(equilibria, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(persistence_check, m)?)?;
    m.add_function(wrap_pyfunction!(hopf_scan, m)?)?;
    m.add_function(wrap_pyfunction!(region_classify, m)?)?;
    m.add_function(wrap_pyfunction!(region_grid, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(classify_attractor, m)?)?;
    m.add_function(wrap_pyfunction!(basin_sample, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_m, m)?)?;
    Ok(())
}

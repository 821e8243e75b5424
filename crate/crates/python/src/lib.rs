//! Python module `wqflow_py`: grids, model parameters, closed-form oracles,
//! the scale ODE, flow runs and verification checks.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use wqflow::closedform::{self, solve_scale_ode, SpecialSolutionParams};
use wqflow::config::Config;
use wqflow::diagnostics::{wq_distance_1d, CDF_SAMPLES};
use wqflow::fields::{self, ScalarField, Topology};
use wqflow::flows::{special_state, Regime};
use wqflow::verify::{self, Check};

fn err(e: wqflow::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Uniform grid on `[lo, hi]^n`, periodic or a truncated box.
#[pyclass(name = "GridSpec", frozen, from_py_object)]
#[derive(Clone)]
struct PyGridSpec {
    inner: fields::GridSpec,
}

#[pymethods]
impl PyGridSpec {
    #[new]
    #[pyo3(signature = (n, lo, hi, points, periodic = true))]
    fn new(n: usize, lo: f64, hi: f64, points: usize, periodic: bool) -> PyResult<Self> {
        let topo = if periodic { Topology::Periodic } else { Topology::Box };
        Ok(Self { inner: fields::GridSpec::cube(n, lo, hi, points, topo).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn points(&self) -> Vec<usize> {
        self.inner.points().to_vec()
    }

    #[getter]
    fn periodic(&self) -> bool {
        self.inner.is_periodic()
    }

    fn spacing(&self, axis: usize) -> PyResult<f64> {
        if axis >= self.inner.dim() {
            return Err(PyValueError::new_err("axis out of range"));
        }
        Ok(self.inner.spacing(axis))
    }

    /// Node coordinates along `axis`.
    fn coords(&self, axis: usize) -> PyResult<Vec<f64>> {
        if axis >= self.inner.dim() {
            return Err(PyValueError::new_err("axis out of range"));
        }
        Ok((0..self.inner.points()[axis]).map(|i| self.inner.coord(axis, i)).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        fields::snapshot::header(&self.inner)
    }
}

/// Exponent `p`, coupling `c` (0 = p-heat, inf = geodesic), regulariser `eps`, dimension `n`.
#[pyclass(name = "ModelParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: fields::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (p, c = f64::INFINITY, eps = fields::ModelParams::DEFAULT_EPS, n = 1))]
    fn new(p: f64, c: f64, eps: f64, n: usize) -> PyResult<Self> {
        Ok(Self { inner: fields::ModelParams::new(p, c, eps, n).map_err(err)? })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c()
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim()
    }

    fn __repr__(&self) -> String {
        format!("ModelParams(p={}, c={}, eps={}, n={})", self.p(), self.c(), self.eps(), self.n())
    }
}

fn field(grid: &PyGridSpec, values: Vec<f64>) -> PyResult<ScalarField> {
    ScalarField::from_vec(grid.inner, values).map_err(err)
}

/// Flux-form p-Laplacian of `phi` sampled on `grid`.
#[pyfunction]
fn p_laplacian(grid: &PyGridSpec, phi: Vec<f64>, params: &PyModelParams) -> PyResult<Vec<f64>> {
    Ok(fields::p_laplacian(&field(grid, phi)?, &params.inner).into_values())
}

/// Pointwise p-Bochner residual of `phi`.
#[pyfunction]
fn bochner_residual(grid: &PyGridSpec, phi: Vec<f64>, params: &PyModelParams) -> PyResult<Vec<f64>> {
    Ok(fields::bochner_residual(&field(grid, phi)?, &params.inner).into_values())
}

/// Midpoint-rule integral of `f`, optionally weighted.
#[pyfunction]
#[pyo3(signature = (grid, f, weight = None))]
fn quadrature(grid: &PyGridSpec, f: Vec<f64>, weight: Option<Vec<f64>>) -> PyResult<f64> {
    let w = weight.map(|w| field(grid, w)).transpose()?;
    Ok(fields::quadrature(&field(grid, f)?, w.as_ref()))
}

#[pyfunction]
fn c_np(n: usize, p: f64) -> PyResult<f64> {
    closedform::c_np(n, p).map_err(err)
}

#[pyfunction]
fn profile_entropy(n: usize, p: f64, w: f64) -> PyResult<f64> {
    closedform::profile_entropy(n, p, w).map_err(err)
}

#[pyfunction]
fn profile_fisher(n: usize, p: f64, w: f64, alpha: f64) -> f64 {
    closedform::profile_fisher(n, p, w, alpha)
}

/// Scale ODE trajectory as a dict of columns, residuals included.
#[pyfunction]
#[pyo3(signature = (c, p, t0, t_end, w0 = 1.0, wdot0 = 1.0, dt = 1e-4, n = 1, beta0 = 0.0))]
#[allow(clippy::too_many_arguments)]
fn scale_ode<'py>(
    py: Python<'py>,
    c: f64,
    p: f64,
    t0: f64,
    t_end: f64,
    w0: f64,
    wdot0: f64,
    dt: f64,
    n: usize,
    beta0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let traj = solve_scale_ode(c, p, w0, wdot0, t0, t_end, dt)
        .and_then(|t| t.with_beta(n, beta0))
        .map_err(err)?;
    let st = traj.states();
    let res = traj.residuals();
    let out = PyDict::new(py);
    out.set_item("t", st.iter().map(|s| s.t).collect::<Vec<_>>())?;
    out.set_item("w", st.iter().map(|s| s.w).collect::<Vec<_>>())?;
    out.set_item("wdot", st.iter().map(|s| s.wdot).collect::<Vec<_>>())?;
    out.set_item("alpha", st.iter().map(|s| s.alpha).collect::<Vec<_>>())?;
    out.set_item("beta", st.iter().map(|s| s.beta).collect::<Vec<_>>())?;
    out.set_item("eta", st.iter().map(|s| s.eta).collect::<Vec<_>>())?;
    out.set_item("pode", res.iter().map(|r| r.pode).collect::<Vec<_>>())?;
    out.set_item("alphaeq", res.iter().map(|r| r.alphaeq).collect::<Vec<_>>())?;
    out.set_item("eta_residual", res.iter().map(|r| r.eta).collect::<Vec<_>>())?;
    Ok(out)
}

/// Self-similar solution at time `t` on its truncation box: `(grid, rho, phi)`.
#[pyfunction]
#[pyo3(signature = (n, p, c, t, points, t0 = 1.0))]
fn special_solution(
    n: usize,
    p: f64,
    c: f64,
    t: f64,
    points: usize,
    t0: f64,
) -> PyResult<(PyGridSpec, Vec<f64>, Vec<f64>)> {
    let regime = if c.is_infinite() {
        Regime::Geodesic
    } else if c == 0.0 {
        Regime::Pheat
    } else {
        Regime::Langevin
    };
    let params = fields::ModelParams::new(p, c, fields::ModelParams::DEFAULT_EPS, n).map_err(err)?;
    let traj = solve_scale_ode(c, p, 1.0, 1.0, t0, t.max(t0) + 1e-3, 1e-4)
        .and_then(|tr| tr.with_beta(n, 0.0))
        .map_err(err)?;
    let s = traj.state_at(t).map_err(err)?;
    let grid = SpecialSolutionParams::new(n, p, c, s.w).and_then(|sp| sp.grid(points)).map_err(err)?;
    let state = special_state(regime, &params, &grid, &s).map_err(err)?;
    Ok((PyGridSpec { inner: grid }, state.rho().into_values(), state.phi.into_values()))
}

/// `W_q` between two densities on the same 1D grid.
#[pyfunction]
#[pyo3(signature = (grid, rho0, rho1, q, samples = CDF_SAMPLES))]
fn distance_1d(grid: &PyGridSpec, rho0: Vec<f64>, rho1: Vec<f64>, q: f64, samples: usize) -> PyResult<f64> {
    wq_distance_1d(&field(grid, rho0)?, &field(grid, rho1)?, q, samples).map_err(err)
}

fn config_from(dict: Option<&Bound<'_, PyDict>>) -> PyResult<Config> {
    let mut cfg = Config::default();
    if let Some(d) = dict {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            let value = v.str()?.to_string();
            cfg.set(&key, &value).map_err(err)?;
        }
    }
    Ok(cfg)
}

const CSV_COLUMNS: [&str; 16] = [
    "t", "mass", "Ent", "Ent_np", "W_np", "dW_np_dt_lhs", "dW_np_dt_rhs", "Ent_cnp", "W_cnp", "I_cnp",
    "H_c", "L_c", "K", "P", "curl_max", "defect",
];

fn run_dict<'py>(py: Python<'py>, run: &verify::RunRecord) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for (i, name) in CSV_COLUMNS.iter().enumerate() {
        out.set_item(*name, run.records.iter().map(|r| r.values()[i]).collect::<Vec<_>>())?;
    }
    out.set_item("steps", run.summary.steps)?;
    out.set_item("dt", run.summary.dt)?;
    out.set_item("max_mass_drift", run.summary.max_mass_drift)?;
    Ok(out)
}

/// Runs one flow from config keys and returns the diagnostics columns.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn simulate<'py>(py: Python<'py>, config: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyDict>> {
    let rc = config_from(config)?.run_config().map_err(err)?;
    let run = verify::record_run("run", &rc).map_err(err)?;
    run_dict(py, &run)
}

/// Runs a verification check; returns `(passed, [(name, measured, bound, passed), ...])`.
#[pyfunction]
#[pyo3(signature = (check, config = None))]
fn run_check<'py>(
    py: Python<'py>,
    check: &str,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<(bool, Bound<'py, PyList>)> {
    let check: Check = check.parse().map_err(err)?;
    let report = verify::run_check(check, &config_from(config)?).map_err(err)?;
    let rows = PyList::empty(py);
    for c in &report.criteria {
        rows.append((c.name.clone(), c.measured, c.bound.to_string(), c.passed()))?;
    }
    Ok((report.passed(), rows))
}

#[pymodule]
fn wqflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyModelParams>()?;
    m.add_function(wrap_pyfunction!(p_laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(bochner_residual, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(c_np, m)?)?;
    m.add_function(wrap_pyfunction!(profile_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(profile_fisher, m)?)?;
    m.add_function(wrap_pyfunction!(scale_ode, m)?)?;
    m.add_function(wrap_pyfunction!(special_solution, m)?)?;
    m.add_function(wrap_pyfunction!(distance_1d, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    m.add("CHECKS", Check::ALL.iter().map(|c| c.name()).collect::<Vec<_>>())?;
    Ok(())
}

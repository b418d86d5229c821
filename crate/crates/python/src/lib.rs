//! Python bindings. Reports and configs cross the boundary as JSON, so the
//! Python side sees plain dicts with the same field names as the CLI output.

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use kummerlab_core::dist::{cdf, log_density, Law, LawSampler, RngState};
use kummerlab_core::harness::{verify_balance as core_balance, verify_limit as core_limit, ExperimentPlan, LimitSpec, StatReport};
use kummerlab_core::ktransform::{identity_residuals, log_klt_closed, BalanceQuadruple, TransformQuery};
use kummerlab_core::lattice::{run_lattice, LatticeConfig};
use kummerlab_core::maps::{psi_jacobian, MapSpec, PlanePoint};
use kummerlab_core::specfun::{kummer_ode_residual, log_kummer_u_with_error, QuadratureConfig, UArgs};
use kummerlab_core::Error;

create_exception!(kummerlab, NumericError, PyArithmeticError, "Quadrature, sampler or floating-point failure.");

fn to_py(e: Error) -> PyErr {
    if e.is_usage() {
        PyValueError::new_err(e.to_string())
    } else {
        NumericError::new_err(e.to_string())
    }
}

fn qcfg(rel_tol: f64) -> PyResult<QuadratureConfig> {
    QuadratureConfig::new(rel_tol, 4096).map_err(to_py)
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn json_dumps(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.extract::<String>() {
        return Ok(s);
    }
    obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()
}

fn reports_to_py<'py>(py: Python<'py>, reports: &[StatReport]) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(reports).map_err(|e| NumericError::new_err(e.to_string()))?;
    json_loads(py, &text)
}

/// `U(a, b, z)` for `a > 0`, `z > 0`.
#[pyfunction]
#[pyo3(signature = (a, b, z, rel_tol = 1e-10))]
fn kummer_u(a: f64, b: f64, z: f64, rel_tol: f64) -> PyResult<f64> {
    Ok(log_kummer_u(a, b, z, rel_tol)?.exp())
}

/// `ln U(a, b, z)`; finite where `U` itself over- or underflows.
#[pyfunction]
#[pyo3(signature = (a, b, z, rel_tol = 1e-10))]
fn log_kummer_u(a: f64, b: f64, z: f64, rel_tol: f64) -> PyResult<f64> {
    let args = UArgs::new(a, b, z).map_err(to_py)?;
    Ok(log_kummer_u_with_error(args, &qcfg(rel_tol)?).map_err(to_py)?.log_value)
}

/// Normalised residual of Kummer's equation with central differences of step `h`.
#[pyfunction]
#[pyo3(signature = (a, b, z, h, rel_tol = 1e-10))]
fn ode_residual(a: f64, b: f64, z: f64, h: f64, rel_tol: f64) -> PyResult<f64> {
    kummer_ode_residual(a, b, z, h, &qcfg(rel_tol)?).map_err(to_py)
}

/// A probability law on the positive half-line, built from a spec such as
/// `"kummer:1,2,3,1"` or `"gamma:2,4"`.
#[pyclass(name = "Law", module = "kummerlab", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyLaw {
    inner: Law,
}

#[pymethods]
impl PyLaw {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyLaw { inner: spec.parse().map_err(to_py)? })
    }

    /// `K_alpha(a, b, c)`.
    #[staticmethod]
    fn kummer(alpha: f64, a: f64, b: f64, c: f64) -> PyResult<Self> {
        Ok(PyLaw { inner: Law::kummer(alpha, a, b, c).map_err(to_py)? })
    }

    #[staticmethod]
    fn gamma(shape: f64, rate: f64) -> PyResult<Self> {
        Ok(PyLaw { inner: Law::gamma(shape, rate).map_err(to_py)? })
    }

    #[getter]
    fn mean(&self) -> Option<f64> {
        self.inner.mean()
    }

    #[getter]
    fn support(&self) -> (f64, f64) {
        self.inner.support()
    }

    #[pyo3(signature = (x, rel_tol = 1e-10))]
    fn log_density(&self, x: f64, rel_tol: f64) -> PyResult<f64> {
        log_density(&self.inner, x, &qcfg(rel_tol)?).map_err(to_py)
    }

    #[pyo3(signature = (x, rel_tol = 1e-10))]
    fn cdf(&self, x: f64, rel_tol: f64) -> PyResult<f64> {
        cdf(&self.inner, x, &qcfg(rel_tol)?).map_err(to_py)
    }

    /// `n` iid draws. The same `(seed, stream)` always gives the same draws.
    #[pyo3(signature = (n, seed = 0, stream = 0, rel_tol = 1e-10))]
    fn sample(&self, py: Python<'_>, n: usize, seed: u64, stream: u64, rel_tol: f64) -> PyResult<Vec<f64>> {
        let cfg = qcfg(rel_tol)?;
        let law = self.inner.clone();
        py.detach(move || {
            LawSampler::new(&law, &cfg).and_then(|s| s.sample_n(&mut RngState::new(seed, stream).rng(), n))
        })
        .map_err(to_py)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Law('{}')", self.inner)
    }
}

/// The involution `psi` with scales `alpha`, `beta` applied to `(x, y)`.
#[pyfunction]
fn psi(alpha: f64, beta: f64, x: f64, y: f64) -> PyResult<(f64, f64)> {
    let m = MapSpec::psi(alpha, beta).map_err(to_py)?;
    let q = m.apply(PlanePoint::new(x, y).map_err(to_py)?).map_err(to_py)?;
    Ok((q.x, q.y))
}

/// Absolute Jacobian determinant of `psi` at `(x, y)`.
#[pyfunction]
fn jacobian(alpha: f64, beta: f64, x: f64, y: f64) -> PyResult<f64> {
    psi_jacobian(alpha, beta, PlanePoint::new(x, y).map_err(to_py)?).map_err(to_py)
}

/// Any map of the lattice/limit families, given as a dict or JSON string
/// such as `{"map": "dkdv", "alpha": 1, "beta": 2}`.
#[pyfunction]
fn apply_map(spec: &Bound<'_, PyAny>, x: f64, y: f64) -> PyResult<(f64, f64)> {
    let m: MapSpec = serde_json::from_str(&json_dumps(spec)?).map_err(|e| PyValueError::new_err(e.to_string()))?;
    m.validate().map_err(to_py)?;
    let q = m.apply(PlanePoint::new(x, y).map_err(to_py)?).map_err(to_py)?;
    Ok((q.x, q.y))
}

/// `X ~ K_alpha(a,b,c)`, `Y ~ K_beta(b,a,c)` and their images
/// `U ~ K_alpha(b,a,c)`, `V ~ K_beta(a,b,c)` under `psi`.
#[pyclass(name = "BalanceQuadruple", module = "kummerlab", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyQuadruple {
    inner: BalanceQuadruple,
}

#[pymethods]
impl PyQuadruple {
    #[new]
    fn new(alpha: f64, beta: f64, a: f64, b: f64, c: f64) -> PyResult<Self> {
        Ok(PyQuadruple { inner: BalanceQuadruple::new(alpha, beta, a, b, c).map_err(to_py)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    fn x_law(&self) -> PyLaw {
        PyLaw { inner: self.inner.x_law().into() }
    }

    fn y_law(&self) -> PyLaw {
        PyLaw { inner: self.inner.y_law().into() }
    }

    fn u_law(&self) -> PyLaw {
        PyLaw { inner: self.inner.u_law().into() }
    }

    fn v_law(&self) -> PyLaw {
        PyLaw { inner: self.inner.v_law().into() }
    }

    /// Relative residuals of the transform identities at `(s, t, z)` as a dict.
    #[pyo3(signature = (s, t, z, rel_tol = 1e-10))]
    fn identity_residuals<'py>(&self, py: Python<'py>, s: f64, t: f64, z: f64, rel_tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let r = identity_residuals(&self.inner, s, t, z, &qcfg(rel_tol)?).map_err(to_py)?;
        json_loads(py, &serde_json::to_string(&r).expect("residuals serialise"))
    }

    /// Statistical check that `psi` carries `X (x) Y` to `U (x) V`; returns report dicts.
    #[pyo3(signature = (n = 100_000, seed = 0, perturbation = 0.0, rel_tol = 1e-10))]
    fn verify<'py>(&self, py: Python<'py>, n: usize, seed: u64, perturbation: f64, rel_tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let cfg = qcfg(rel_tol)?;
        let plan = ExperimentPlan::new(self.inner, n, seed).with_perturbation(perturbation).map_err(to_py)?;
        let reports = py.detach(move || core_balance(&plan, &cfg)).map_err(to_py)?;
        reports_to_py(py, &reports)
    }

    fn __repr__(&self) -> String {
        let q = &self.inner;
        format!("BalanceQuadruple(alpha={}, beta={}, a={}, b={}, c={})", q.alpha, q.beta, q.a, q.b, q.c)
    }
}

/// Closed-form `E[W^s (1 + alpha W)^-t e^(-z W)]` for a Kummer law.
#[pyfunction]
#[pyo3(signature = (law, s, t, z, rel_tol = 1e-10))]
fn transform(law: &PyLaw, s: f64, t: f64, z: f64, rel_tol: f64) -> PyResult<f64> {
    let Law::Kummer(p) = &law.inner else {
        return Err(PyValueError::new_err(format!("transform needs a kummer law, got {}", law.inner)));
    };
    let q = TransformQuery::new(p.alpha, s, t, z).map_err(to_py)?;
    Ok(log_klt_closed(p, &q, &qcfg(rel_tol)?).map_err(to_py)?.exp())
}

/// Convergence of a limit family (`lukacs`, `kummer_gamma`,
/// `matsumoto_yor`, `kdv`) with default parameters.
#[pyfunction]
#[pyo3(signature = (kind, n_list = vec![10, 100, 1000], sample_n = 50_000, seed = 0, rel_tol = 1e-10))]
fn verify_limit<'py>(
    py: Python<'py>,
    kind: &str,
    n_list: Vec<u64>,
    sample_n: usize,
    seed: u64,
    rel_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = qcfg(rel_tol)?;
    let spec = LimitSpec::default_for(kind).map_err(to_py)?;
    let reports = py.detach(move || core_limit(&spec, &n_list, sample_n, seed, &cfg)).map_err(to_py)?;
    reports_to_py(py, &reports)
}

/// Runs a lattice experiment from a config dict (same fields as the CLI's
/// lattice config) and returns `{"reports": [...], "final_state": [...]}`.
#[pyfunction]
#[pyo3(signature = (config, rel_tol = 1e-10))]
fn lattice<'py>(py: Python<'py>, config: &Bound<'py, PyAny>, rel_tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let cfg = qcfg(rel_tol)?;
    let lc: LatticeConfig =
        serde_json::from_str(&json_dumps(config)?).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let run = py.detach(move || run_lattice(&lc, &cfg)).map_err(to_py)?;
    let out = serde_json::json!({ "reports": run.reports, "final_state": run.final_state.x });
    json_loads(py, &out.to_string())
}

#[pymodule]
fn kummerlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NumericError", m.py().get_type::<NumericError>())?;
    m.add_class::<PyLaw>()?;
    m.add_class::<PyQuadruple>()?;
    m.add_function(wrap_pyfunction!(kummer_u, m)?)?;
    m.add_function(wrap_pyfunction!(log_kummer_u, m)?)?;
    m.add_function(wrap_pyfunction!(ode_residual, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(apply_map, m)?)?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(verify_limit, m)?)?;
    m.add_function(wrap_pyfunction!(lattice, m)?)?;
    Ok(())
}

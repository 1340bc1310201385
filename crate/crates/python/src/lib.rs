//! Python bindings for the `slexp` integrators.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use slexp_core::exp_core;
use slexp_core::field::Field;
use slexp_core::grid::PeriodicGrid1D;
use slexp_core::harness::{self, ReferenceKind, ReferenceSettings, RunConfig};
use slexp_core::problems::{self, Problem, PROBLEM_NAMES};
use slexp_core::schemes::{self, OpCounters, SchemeConfig, SchemeKind, StepState};
use slexp_core::stability;
use slexp_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::Usage(_) | Error::Config(_) | Error::Dimension { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn scheme(name: &str) -> PyResult<SchemeKind> {
    name.parse().map_err(to_py)
}

/// `phi_k(z)`.
#[pyfunction]
fn eval_phi(k: usize, z: Complex64) -> PyResult<Complex64> {
    exp_core::eval_phi(k, z).map_err(to_py)
}

/// `psi_k(z)`.
#[pyfunction]
fn eval_psi(k: usize, z: Complex64) -> PyResult<Complex64> {
    exp_core::eval_psi(k, z).map_err(to_py)
}

/// Amplification `|A|` of a scheme at `(xi_L, xi_N, kappa s)`.
#[pyfunction]
#[pyo3(signature = (scheme_name, xi_l, xi_n, kappa_s=0.0))]
fn stability_function(scheme_name: &str, xi_l: Complex64, xi_n: Complex64, kappa_s: f64) -> PyResult<f64> {
    stability::stability_function(scheme(scheme_name)?, xi_l, xi_n, kappa_s)
        .map(|s| s.amplification)
        .map_err(to_py)
}

/// Scan over imaginary `xi_L` (rows) and `xi_N` (columns). Returns `(amplification, stable)` as nested lists.
#[pyfunction]
#[pyo3(signature = (scheme_name, n=401, extent=4.0, kappa_zero=false))]
fn region_scan(
    scheme_name: &str,
    n: usize,
    extent: f64,
    kappa_zero: bool,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    let axis = stability::symmetric_axis(n, extent);
    let ks = if kappa_zero { vec![0.0] } else { stability::kappa_set() };
    let scan = stability::region_scan(scheme(scheme_name)?, &axis, &axis, &ks).map_err(to_py)?;
    let cols = axis.len();
    let amp = scan.amplification.chunks(cols).map(<[f64]>::to_vec).collect();
    let stable = scan.stable.chunks(cols).map(<[bool]>::to_vec).collect();
    Ok((amp, stable))
}

/// `(exp(dt Lambda) S u, exp(dt/2 Lambda) S exp(dt/2 Lambda) u)` for a diagonal `Lambda` and unit shift `S`.
#[pyfunction]
fn shift_counterexample(lam: Vec<Complex64>, dt: f64, u: Vec<Complex64>) -> PyResult<(Vec<Complex64>, Vec<Complex64>)> {
    stability::shift_counterexample(&lam, dt, &u).map_err(to_py)
}

/// Convergence study. Returns `(records, order)` where each record is a dict.
#[pyfunction]
#[pyo3(signature = (problem, scheme_name, dts, end, resolution=None, reference="auto", reference_dt=None))]
fn run_convergence<'py>(
    py: Python<'py>,
    problem: &str,
    scheme_name: &str,
    dts: Vec<f64>,
    end: f64,
    resolution: Option<usize>,
    reference: &str,
    reference_dt: Option<f64>,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Option<f64>)> {
    let mut cfg = RunConfig::new(problem, scheme(scheme_name)?, dts, end);
    cfg.resolutions = vec![resolution];
    cfg.reference = ReferenceSettings {
        kind: reference.parse::<ReferenceKind>().map_err(to_py)?,
        dt: reference_dt,
    };
    let result = py.detach(|| harness::run_convergence(&cfg)).map_err(to_py)?;
    let mut rows = Vec::with_capacity(result.records.len());
    for r in &result.records {
        let d = PyDict::new(py);
        d.set_item("dt", r.dt)?;
        d.set_item("resolution", r.resolution)?;
        d.set_item("rel_l2", r.rel_l2)?;
        d.set_item("rel_linf", r.rel_linf)?;
        d.set_item("blow_up", r.blow_up)?;
        rows.push(d);
    }
    Ok((rows, result.order()))
}

fn counter_dict<'py>(py: Python<'py>, c: &OpCounters) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (name, v) in OpCounters::COLUMNS.iter().zip(c.row()) {
        d.set_item(*name, v)?;
    }
    Ok(d)
}

/// Operation counts of one step on the perturbed shallow-water setup.
#[pyfunction]
#[pyo3(signature = (scheme_name, resolution=32, dt=0.01))]
fn counters<'py>(py: Python<'py>, scheme_name: &str, resolution: usize, dt: f64) -> PyResult<Bound<'py, PyDict>> {
    let p = problems::build("swe-plane-perturbed", Some(resolution)).map_err(to_py)?;
    let cfg = SchemeConfig::new(scheme(scheme_name)?, dt).map_err(to_py)?;
    let s = StepState::initial(p.as_ref(), p.initial_state(), 0.0).map_err(to_py)?;
    let (_, c) = schemes::step(&cfg, p.as_ref(), &s).map_err(to_py)?;
    counter_dict(py, &c)
}

#[pyfunction]
fn problem_names() -> Vec<&'static str> {
    PROBLEM_NAMES.to_vec()
}

/// Uniform periodic grid on `[0, length)`.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: PeriodicGrid1D,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(length: f64, points: usize) -> PyResult<Self> {
        Ok(Self {
            inner: PeriodicGrid1D::new(length, points).map_err(to_py)?,
        })
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes()
    }

    /// Unnormalised forward transform.
    fn forward(&self, f: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.forward(&f).map_err(to_py)?.into_modes())
    }

    /// Spectral derivative of grid values.
    #[pyo3(signature = (f, order=1))]
    fn derivative(&self, f: Vec<Complex64>, order: u32) -> PyResult<Vec<Complex64>> {
        let s = self.inner.forward(&f).map_err(to_py)?;
        let d = s.spectral_derivative(order).map_err(to_py)?;
        self.inner.inverse(&d).map_err(to_py)
    }

    /// Periodic cubic Lagrange interpolation.
    fn interp_cubic(&self, f: Vec<f64>, targets: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.interp_cubic(&f, &targets).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Grid(length={}, points={})", self.inner.length(), self.inner.points())
    }
}

/// A named problem stepped by one scheme.
#[pyclass(name = "Simulation")]
struct PySimulation {
    problem: Arc<dyn Problem>,
    cfg: SchemeConfig,
    state: StepState,
    totals: OpCounters,
}

#[pymethods]
impl PySimulation {
    #[new]
    #[pyo3(signature = (problem, scheme_name, dt, resolution=None, viscosity_order=0, viscosity_coeff=0.0))]
    fn new(
        problem: &str,
        scheme_name: &str,
        dt: f64,
        resolution: Option<usize>,
        viscosity_order: u32,
        viscosity_coeff: f64,
    ) -> PyResult<Self> {
        let p = problems::build(problem, resolution).map_err(to_py)?;
        let cfg = SchemeConfig::new(scheme(scheme_name)?, dt)
            .and_then(|c| c.with_viscosity(viscosity_order, viscosity_coeff))
            .map_err(to_py)?;
        let state = StepState::initial(p.as_ref(), p.initial_state(), 0.0).map_err(to_py)?;
        Ok(Self {
            problem: p,
            cfg,
            state,
            totals: OpCounters::default(),
        })
    }

    /// Advances `n` steps.
    #[pyo3(signature = (n=1))]
    fn step(&mut self, py: Python<'_>, n: usize) -> PyResult<()> {
        let (p, cfg, s) = (self.problem.as_ref(), &self.cfg, self.state.clone());
        let (next, c) = py.detach(|| schemes::integrate(cfg, p, s, n)).map_err(to_py)?;
        self.state = next;
        self.totals += c;
        Ok(())
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.t
    }

    #[getter]
    fn steps(&self) -> usize {
        self.state.step_index
    }

    /// Current state, one list per component.
    fn state(&self) -> Field {
        self.state.u.clone()
    }

    fn exact_solution(&self) -> Option<Field> {
        self.problem.exact_solution(self.state.t)
    }

    /// Operation counts summed over all steps so far.
    fn counters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        counter_dict(py, &self.totals)
    }

    fn __repr__(&self) -> String {
        format!(
            "Simulation(problem={:?}, scheme={}, dt={}, t={})",
            self.problem.name(),
            self.cfg.scheme,
            self.cfg.dt,
            self.state.t
        )
    }
}

#[pymodule]
fn slexp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(eval_phi, m)?)?;
    m.add_function(wrap_pyfunction!(eval_psi, m)?)?;
    m.add_function(wrap_pyfunction!(stability_function, m)?)?;
    m.add_function(wrap_pyfunction!(region_scan, m)?)?;
    m.add_function(wrap_pyfunction!(shift_counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(run_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(counters, m)?)?;
    m.add_function(wrap_pyfunction!(problem_names, m)?)?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PySimulation>()?;
    Ok(())
}

//! Python bindings for `expgeom`.
//!
//! Matrices cross the boundary as lists of rows, points as lists of floats.

use std::sync::Arc;

use expgeom::geometry::{fisher_norm_functional, l1_perturbed_functional, MetricField};
use expgeom::invariance::{self, sinusoidal_metric, AxiomReport};
use expgeom::tensors;
use expgeom::{builtin_families, make_family, ExpFamily, Route, TangentCoord};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: expgeom::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn column(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// An exponential family over a finite or quadrature base measure.
#[pyclass(frozen, name = "Family", module = "pyexpgeom")]
pub struct PyFamily {
    inner: Arc<ExpFamily>,
}

#[pymethods]
impl PyFamily {
    /// Builds one of the built-in families, e.g. `Family("binomial", [4])`.
    #[new]
    #[pyo3(signature = (name, params = Vec::new()))]
    fn new(name: &str, params: Vec<usize>) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(make_family(name, &params).map_err(py_err)?) })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn grid(&self) -> Vec<Vec<f64>> {
        self.inner.grid().to_vec()
    }

    /// `(lo, hi)` corners of the parameter box.
    #[getter]
    fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.inner.domain();
        (d.lo.clone(), d.hi.clone())
    }

    fn log_partition(&self, theta: Vec<f64>) -> PyResult<f64> {
        self.inner.log_partition(&theta).map_err(py_err)
    }

    fn mean(&self, theta: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(column(&self.inner.mean_statistic(&theta).map_err(py_err)?))
    }

    fn cov(&self, theta: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.cov_statistic(&theta).map_err(py_err)?))
    }

    /// Fisher matrix by route `"A"`, `"B"` or `"C"`.
    #[pyo3(signature = (theta, route = "A"))]
    fn fisher(&self, theta: Vec<f64>, route: &str) -> PyResult<Vec<Vec<f64>>> {
        let route: Route = route.parse().map_err(py_err)?;
        Ok(rows(&self.inner.fisher_information(&theta, route).map_err(py_err)?))
    }

    fn __repr__(&self) -> String {
        format!("Family({:?}, order={})", self.inner.name(), self.inner.order())
    }
}

/// Outcome of an axiom check.
#[pyclass(frozen, get_all, name = "AxiomReport", module = "pyexpgeom")]
pub struct PyAxiomReport {
    axiom: String,
    family: String,
    theta: Vec<f64>,
    n_values: Vec<usize>,
    residual: f64,
    tolerance: f64,
    passed: bool,
}

impl From<AxiomReport> for PyAxiomReport {
    fn from(r: AxiomReport) -> Self {
        Self {
            axiom: r.axiom.to_string(),
            family: r.family,
            theta: r.theta,
            n_values: r.n_values,
            residual: r.residual,
            tolerance: r.tolerance,
            passed: r.pass,
        }
    }
}

#[pymethods]
impl PyAxiomReport {
    fn __repr__(&self) -> String {
        format!(
            "AxiomReport({}, family={:?}, residual={:e}, tolerance={:e}, passed={})",
            self.axiom,
            self.family,
            self.residual,
            self.tolerance,
            if self.passed { "True" } else { "False" }
        )
    }
}

#[pyfunction]
fn families() -> Vec<PyFamily> {
    builtin_families().into_iter().map(|f| PyFamily { inner: Arc::new(f) }).collect()
}

/// IID scaling of the Fisher metric between the `n`-fold extension and
/// the base family.
#[pyfunction]
fn check_a1(family: &PyFamily, theta: Vec<f64>, a: Vec<f64>, b: Vec<f64>, n: usize) -> PyResult<PyAxiomReport> {
    let (u, v) = (TangentCoord::new(theta.clone(), a), TangentCoord::new(theta, b));
    Ok(invariance::check_a1(&family.inner, &u, &v, n).map_err(py_err)?.into())
}

/// Fisher metric preserved by the sufficient statistic of the `n`-fold
/// extension.
#[pyfunction]
fn check_a2(family: &PyFamily, theta: Vec<f64>, a: Vec<f64>, b: Vec<f64>, n: usize) -> PyResult<PyAxiomReport> {
    let (u, v) = (TangentCoord::new(theta.clone(), a), TangentCoord::new(theta, b));
    Ok(invariance::check_a2(&family.inner, &u, &v, n).map_err(py_err)?.into())
}

/// Fisher norm of the standardised mean-statistic tangent at sample size `n`.
#[pyfunction]
fn claim1_pipeline(family: &PyFamily, theta: Vec<f64>, a: Vec<f64>, n: usize) -> PyResult<f64> {
    invariance::claim1_pipeline(&family.inner, &TangentCoord::new(theta, a), n).map_err(py_err)
}

/// Common value of the pipeline across `n`.
#[pyfunction]
fn chain_limit(family: &PyFamily, theta: Vec<f64>, a: Vec<f64>) -> PyResult<f64> {
    invariance::chain_limit(&family.inner, &TangentCoord::new(theta, a)).map_err(py_err)
}

/// `(moment_gap, ks_max)` of the standardised mean statistic.
#[pyfunction]
fn clt_diagnostics(family: &PyFamily, theta: Vec<f64>, n: usize) -> PyResult<(f64, f64)> {
    let d = invariance::clt_diagnostics(&family.inner, &theta, n).map_err(py_err)?;
    Ok((d.moment_gap, d.ks_max))
}

/// Gap in the chain value between sample sizes `n1` and `n2` for the norm
/// `"fisher"`, or the Fisher norm plus `eps` times the L1 norm.
#[pyfunction]
#[pyo3(signature = (family, theta, a, n1, n2, l1_eps = 0.0))]
fn uniqueness_residual(
    family: &PyFamily,
    theta: Vec<f64>,
    a: Vec<f64>,
    n1: usize,
    n2: usize,
    l1_eps: f64,
) -> PyResult<f64> {
    let h = if l1_eps == 0.0 { fisher_norm_functional() } else { l1_perturbed_functional(l1_eps) };
    invariance::uniqueness_residual(&h, &family.inner, &TangentCoord::new(theta, a), n1, n2).map_err(py_err)
}

/// Estimates `c` for the metric `c·g^F`, or for the non-invariant metric
/// `(1 + amplitude·sin θ₁)·g^F` when `sinusoidal` is set.
/// Returns `(c_hat, spread)`.
#[pyfunction]
#[pyo3(signature = (family, c = 1.0, trials = 20, seed = 42, sinusoidal = None))]
fn recover_constant(
    family: &PyFamily,
    c: f64,
    trials: usize,
    seed: u64,
    sinusoidal: Option<f64>,
) -> PyResult<(f64, f64)> {
    let g = match sinusoidal {
        Some(amp) => sinusoidal_metric(family.inner.clone(), amp),
        None => MetricField::scaled_fisher(family.inner.clone(), c),
    };
    let e = invariance::recover_constant(&g, trials, seed).map_err(py_err)?;
    Ok((e.c_hat, e.spread))
}

/// Third cumulant tensor `∂³ψ` at `theta` along three directions.
#[pyfunction]
fn amari_chentsov(family: &PyFamily, theta: Vec<f64>, dirs: Vec<Vec<f64>>) -> PyResult<f64> {
    tensors::amari_chentsov(&family.inner, &theta, &dirs).map_err(py_err)
}

/// Finite-difference estimate of the same tensor.
#[pyfunction]
#[pyo3(signature = (family, theta, dirs, h = tensors::THIRD_DERIVATIVE_STEP))]
fn fd_third_derivative(family: &PyFamily, theta: Vec<f64>, dirs: Vec<Vec<f64>>, h: f64) -> PyResult<f64> {
    tensors::fd_third_derivative(&family.inner, &theta, &dirs, h).map_err(py_err)
}

/// `(lhs, rhs, residual, exponent)` for order-`k` score moments at size `n`.
#[pyfunction]
fn higher_scaling(
    family: &PyFamily,
    theta: Vec<f64>,
    a: Vec<f64>,
    n: usize,
    k: usize,
) -> PyResult<(f64, f64, f64, Option<f64>)> {
    let r = tensors::higher_scaling_check(&family.inner, &theta, &a, n, k).map_err(py_err)?;
    Ok((r.lhs, r.rhs, r.residual, r.exponent))
}

#[pymodule]
fn pyexpgeom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PyAxiomReport>()?;
    m.add_function(wrap_pyfunction!(families, m)?)?;
    m.add_function(wrap_pyfunction!(check_a1, m)?)?;
    m.add_function(wrap_pyfunction!(check_a2, m)?)?;
    m.add_function(wrap_pyfunction!(claim1_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(chain_limit, m)?)?;
    m.add_function(wrap_pyfunction!(clt_diagnostics, m)?)?;
    m.add_function(wrap_pyfunction!(uniqueness_residual, m)?)?;
    m.add_function(wrap_pyfunction!(recover_constant, m)?)?;
    m.add_function(wrap_pyfunction!(amari_chentsov, m)?)?;
    m.add_function(wrap_pyfunction!(fd_third_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(higher_scaling, m)?)?;
    Ok(())
}

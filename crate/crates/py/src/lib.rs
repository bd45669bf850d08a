//! Python bindings for the citation dynamics toolkit.
//!
//! Structured results (metrics, fits, splits) come back as plain dicts with
//! the same keys as the JSON files written by the CLI.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use citedyn::corpus::{AgePanel, Discipline, PanelEntry};
use citedyn::distfit::{fit_lognormal_quantile, make_quantile_series, ZeroHandling};
use citedyn::gamma::{build_reckoner, gamma_index, gamma_star_scores, GammaScore};
use citedyn::historyfit::{cumulative_split, derive_metrics_from_params, FitOptions, HistoryParams, Weighting};
use citedyn::stochastic::{count_citations, CountingMode, PathEnsemble, Scheme, SdeConfig, VolatilityFit};

fn err(e: citedyn::Error) -> PyErr {
    match e {
        citedyn::Error::Convergence(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: std::str::FromStr<Err = citedyn::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Citation history curve u(t) = A·f(t+1; mu, sigma) + B·tanh(lam·t).
/// Leave `lam` as None for the λ → ∞ limit.
#[pyclass(name = "HistoryParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyHistoryParams {
    inner: HistoryParams,
}

#[pymethods]
impl PyHistoryParams {
    #[new]
    #[pyo3(signature = (a, mu, sigma, b, lam=None))]
    fn new(a: f64, mu: f64, sigma: f64, b: f64, lam: Option<f64>) -> PyResult<Self> {
        let inner = match lam {
            Some(l) => HistoryParams::new(a, mu, sigma, b, l),
            None => HistoryParams::capped(a, mu, sigma, b),
        };
        inner.map(|inner| PyHistoryParams { inner }).map_err(err)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b
    }

    /// None when capped.
    #[getter]
    fn lam(&self) -> Option<f64> {
        (!self.inner.lambda_capped).then_some(self.inner.lambda)
    }

    fn __call__(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn eval(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &derive_metrics_from_params(&self.inner))
    }

    /// Cumulative split {T, F, G, H, rho} at age `horizon` ≥ 1.
    fn cumulative<'py>(&self, py: Python<'py>, horizon: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &cumulative_split(&self.inner, horizon).map_err(err)?)
    }

    /// γ = ln(c / H(T)).
    fn gamma(&self, c: f64, horizon: f64) -> PyResult<f64> {
        gamma_index(c, horizon, &self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        let lam = if p.lambda_capped { "None".to_string() } else { p.lambda.to_string() };
        format!("HistoryParams(a={}, mu={}, sigma={}, b={}, lam={lam})", p.a, p.mu, p.sigma, p.b)
    }
}

/// Fit the history curve to mean yearly citations by age. Returns
/// `(params, report)` where `report` holds errors, R² and convergence.
#[pyfunction]
#[pyo3(signature = (ages, means, discipline="astro-ph", weighting="none", counts=None))]
fn fit_history<'py>(
    py: Python<'py>,
    ages: Vec<u32>,
    means: Vec<f64>,
    discipline: &str,
    weighting: &str,
    counts: Option<Vec<u64>>,
) -> PyResult<(PyHistoryParams, Bound<'py, PyAny>)> {
    if ages.len() != means.len() || counts.as_ref().is_some_and(|c| c.len() != ages.len()) {
        return Err(PyValueError::new_err("ages, means and counts must have equal length"));
    }
    let weighting = match weighting {
        "none" => Weighting::Unweighted,
        "population" => Weighting::Population,
        "relative" => Weighting::Relative,
        other => return Err(PyValueError::new_err(format!("unknown weighting '{other}'"))),
    };
    let d: Discipline = parse(discipline)?;
    let entries = ages
        .iter()
        .zip(&means)
        .enumerate()
        .map(|(i, (&age, &u))| {
            let n = counts.as_ref().map_or(1, |c| c[i]);
            PanelEntry { age, mean_citations: u, n_eprints: n, total_citations: (u * n as f64).round() as u64 }
        })
        .collect();
    let panel = AgePanel { discipline: d, dataset_year: 0, percentile_cap: None, population: 0, entries, omitted_ages: vec![] };
    let opts = FitOptions { weighting, ..FitOptions::default() };
    let fit = py.detach(|| citedyn::historyfit::fit_history(&panel, &opts)).map_err(err)?;
    Ok((PyHistoryParams { inner: fit.params }, to_py(py, &fit)?))
}

/// Lognormal quantile-plot fit of citation counts: {b, m, se_b, se_m, r2_adj, n}.
#[pyfunction]
#[pyo3(signature = (counts, zeros="rank-then-drop"))]
fn fit_lognormal<'py>(py: Python<'py>, counts: Vec<u64>, zeros: &str) -> PyResult<Bound<'py, PyAny>> {
    let zeros: ZeroHandling = parse(zeros)?;
    let series = make_quantile_series(&counts, zeros).map_err(err)?;
    to_py(py, &fit_lognormal_quantile(&series).map_err(err)?)
}

/// γ over a grid of citation levels (rows) and ages (columns); negative
/// cells are None.
#[pyfunction]
fn reckoner(params: PyRef<'_, PyHistoryParams>, citations: Vec<u64>, ages: Vec<u32>) -> PyResult<Vec<Vec<Option<f64>>>> {
    Ok(build_reckoner(&params.inner, None, &citations, &ages).map_err(err)?.gamma)
}

/// γ* of each value within one group.
#[pyfunction]
fn gamma_star(values: Vec<f64>) -> PyResult<Vec<f64>> {
    let scores: Vec<GammaScore> = values
        .iter()
        .enumerate()
        .map(|(i, &g)| GammaScore { eprint_id: i.to_string(), discipline: Discipline::AstroPh, age: 1, c: 1, gamma: g })
        .collect();
    Ok(gamma_star_scores(&scores).map_err(err)?.into_iter().map(|s| s.gamma_star).collect())
}

/// Volatility schedule β⋆(t) = √(s2 / (t + s1)).
#[pyclass(name = "VolatilityFit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyVolatility {
    inner: VolatilityFit,
}

#[pymethods]
impl PyVolatility {
    #[new]
    fn new(s1: f64, s2: f64) -> PyResult<Self> {
        VolatilityFit::new(s1, s2).map(|inner| PyVolatility { inner }).map_err(err)
    }

    #[getter]
    fn s1(&self) -> f64 {
        self.inner.s1
    }

    #[getter]
    fn s2(&self) -> f64 {
        self.inner.s2
    }

    fn beta_star(&self, t: f64) -> f64 {
        self.inner.beta_star(t)
    }

    fn m_hat(&self, t: f64) -> f64 {
        self.inner.m_hat(t)
    }

    fn __repr__(&self) -> String {
        format!("VolatilityFit(s1={}, s2={})", self.inner.s1, self.inner.s2)
    }
}

#[pyfunction]
fn fit_volatility(ages: Vec<f64>, slopes: Vec<f64>) -> PyResult<PyVolatility> {
    if ages.len() != slopes.len() {
        return Err(PyValueError::new_err("ages and slopes must have equal length"));
    }
    let series: Vec<(f64, f64)> = ages.into_iter().zip(slopes).collect();
    citedyn::stochastic::fit_volatility(&series).map(|inner| PyVolatility { inner }).map_err(err)
}

/// Simulated attention paths on a regular grid.
#[pyclass(name = "Ensemble", frozen)]
struct PyEnsemble {
    inner: PathEnsemble,
}

#[pymethods]
impl PyEnsemble {
    fn __len__(&self) -> usize {
        self.inner.n_paths()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.grid()
    }

    fn path(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.n_paths() {
            return Err(PyValueError::new_err(format!("path {i} out of range")));
        }
        Ok(self.inner.path(i).to_vec())
    }

    fn values_at(&self, t: f64) -> PyResult<Vec<f64>> {
        self.inner.values_at(t).map_err(err)
    }

    /// Cumulative citations per path at `horizon` (default: end of grid).
    #[pyo3(signature = (mode="integral-floor", horizon=None))]
    fn counts(&self, mode: &str, horizon: Option<f64>) -> PyResult<Vec<u64>> {
        let mode = match mode {
            "integral-floor" => CountingMode::IntegralFloor,
            "yearly-floor-sum" => CountingMode::YearlyFloorSum,
            other => return Err(PyValueError::new_err(format!("unknown counting mode '{other}'"))),
        };
        count_citations(&self.inner, mode, horizon).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (params, vol, n_paths=1000, seed=1, dt=0.01, horizon=10.0, scheme="exact"))]
fn simulate(
    py: Python<'_>,
    params: PyRef<'_, PyHistoryParams>,
    vol: PyRef<'_, PyVolatility>,
    n_paths: usize,
    seed: u64,
    dt: f64,
    horizon: f64,
    scheme: &str,
) -> PyResult<PyEnsemble> {
    let scheme = match scheme {
        "exact" => Scheme::Exact,
        "euler-maruyama" => Scheme::EulerMaruyama,
        other => return Err(PyValueError::new_err(format!("unknown scheme '{other}'"))),
    };
    let cfg = SdeConfig { dt, horizon, n_paths, seed, scheme, ..SdeConfig::default() };
    let (p, v) = (params.inner, vol.inner);
    let inner = py.detach(|| citedyn::stochastic::simulate_ensemble(&p, &v, &cfg)).map_err(err)?;
    Ok(PyEnsemble { inner })
}

#[pymodule]
mod citedyn_py {
    #[pymodule_export]
    use super::{
        fit_history, fit_lognormal, fit_volatility, gamma_star, reckoner, simulate, PyEnsemble, PyHistoryParams,
        PyVolatility,
    };
}

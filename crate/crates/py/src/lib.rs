//! Python bindings for the dtsp solvers.

use std::cell::RefCell;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dtsp::graddesc::{self, fields::FnField, DescentConfig, StepSchedule};
use dtsp::instance::{self as inst, City, CityId, DistanceConvention};
use dtsp::{aco, hybrid, localsearch, AcoParams, EventSchedule, HybridParams, Tour};

fn to_py(e: dtsp::Error) -> PyErr {
    match e {
        dtsp::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        e if e.is_config_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A set of cities with precomputed pairwise distances.
#[pyclass(name = "Instance", module = "dtsp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: inst::Instance,
}

fn position(inner: &inst::Instance, id: CityId) -> PyResult<usize> {
    inner
        .position_of(id)
        .ok_or_else(|| PyValueError::new_err(format!("unknown city id {id}")))
}

#[pymethods]
impl PyInstance {
    /// Cities from `(id, x, y)` triples with exact Euclidean distances.
    #[new]
    fn new(cities: Vec<(CityId, f64, f64)>) -> PyResult<Self> {
        let cities = cities
            .into_iter()
            .map(|(id, x, y)| City::new(id, x, y))
            .collect();
        let inner = inst::Instance::new(cities, DistanceConvention::Euclidean).map_err(to_py)?;
        Ok(PyInstance { inner })
    }

    /// `n` uniform cities in `[0, width] x [0, height]`, ids `0..n`.
    #[staticmethod]
    #[pyo3(signature = (n, seed=0, width=100.0, height=100.0))]
    fn random(n: usize, seed: u64, width: f64, height: f64) -> PyResult<Self> {
        let inner = inst::generate_random_instance(n, (width, height), seed).map_err(to_py)?;
        Ok(PyInstance { inner })
    }

    /// Reads a TSPLIB EUC_2D or native instance file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyInstance {
            inner: inst::load_instance(path).map_err(to_py)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Instance({} cities)", self.inner.len())
    }

    fn ids(&self) -> Vec<CityId> {
        self.inner.ids()
    }

    fn coords(&self) -> Vec<(CityId, f64, f64)> {
        self.inner
            .cities()
            .iter()
            .map(|c| (c.id, c.x, c.y))
            .collect()
    }

    /// Distance between two cities given by id.
    fn distance(&self, a: CityId, b: CityId) -> PyResult<f64> {
        Ok(self
            .inner
            .dist(position(&self.inner, a)?, position(&self.inner, b)?))
    }

    /// Closed-tour length of a permutation of city ids.
    fn tour_length(&self, ids: Vec<CityId>) -> PyResult<f64> {
        inst::tour_length(&self.inner, &ids).map_err(to_py)
    }

    /// Greedy tour from `start`; returns `(ids, length)`.
    fn nearest_neighbor_tour(&self, start: CityId) -> PyResult<(Vec<CityId>, f64)> {
        let t = inst::nearest_neighbor_tour(&self.inner, start).map_err(to_py)?;
        Ok((t.city_ids(&self.inner), t.length()))
    }
}

/// Outcome of one solver run.
#[pyclass(name = "RunResult", module = "dtsp", frozen)]
struct PyRunResult {
    inner: aco::RunResult,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn best_tour(&self) -> Vec<CityId> {
        self.inner.best_tour.city_ids(&self.inner.final_instance)
    }

    #[getter]
    fn best_length(&self) -> f64 {
        self.inner.final_length()
    }

    /// Best-so-far length after every iteration.
    #[getter]
    fn trace(&self) -> Vec<f64> {
        self.inner.best_length_per_iter.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn iterations_to_best(&self) -> usize {
        self.inner.iterations_to_best()
    }

    #[getter]
    fn reinit_iterations(&self) -> Vec<usize> {
        self.inner.reinit_iterations.clone()
    }

    /// The instance as it stood after the last event.
    #[getter]
    fn final_instance(&self) -> PyInstance {
        PyInstance {
            inner: self.inner.final_instance.clone(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(best_length={}, seed={}, iterations={})",
            self.inner.final_length(),
            self.inner.seed,
            self.inner.iterations
        )
    }
}

fn schedule(events: Option<PathBuf>) -> PyResult<EventSchedule> {
    match events {
        Some(p) => EventSchedule::load(p).map_err(to_py),
        None => Ok(EventSchedule::empty()),
    }
}

#[allow(clippy::too_many_arguments)]
fn aco_params(
    iters: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    rho: Option<f64>,
    q: Option<f64>,
    ants: Option<usize>,
    tau0: Option<f64>,
    tau_max: Option<f64>,
) -> AcoParams {
    let d = AcoParams::default();
    AcoParams {
        alpha: alpha.unwrap_or(d.alpha),
        beta: beta.unwrap_or(d.beta),
        rho: rho.unwrap_or(d.rho),
        q: q.unwrap_or(d.q),
        ants: ants.or(d.ants),
        tau0: tau0.or(d.tau0),
        tau_max: tau_max.or(d.tau_max),
        max_iters: iters.unwrap_or(d.max_iters),
    }
}

/// Baseline ant colony run.
#[pyfunction]
#[pyo3(signature = (instance, seed=0, *, events=None, iters=None, alpha=None, beta=None, rho=None, q=None, ants=None, tau0=None, tau_max=None))]
#[allow(clippy::too_many_arguments)]
fn run_aco(
    py: Python<'_>,
    instance: &PyInstance,
    seed: u64,
    events: Option<PathBuf>,
    iters: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    rho: Option<f64>,
    q: Option<f64>,
    ants: Option<usize>,
    tau0: Option<f64>,
    tau_max: Option<f64>,
) -> PyResult<PyRunResult> {
    let sched = schedule(events)?;
    let params = aco_params(iters, alpha, beta, rho, q, ants, tau0, tau_max);
    let inner = py
        .detach(|| aco::run_aco(&instance.inner, &sched, &params, seed))
        .map_err(to_py)?;
    Ok(PyRunResult { inner })
}

/// Hybrid run. `stagnation_window=0` disables pheromone resets.
#[pyfunction]
#[pyo3(signature = (instance, seed=0, *, events=None, iters=None, alpha=None, beta=None, rho=None, q=None, ants=None, tau0=None, tau_max=None, t=None, x_max=None, stagnation_window=None, best_only_local_search=false))]
#[allow(clippy::too_many_arguments)]
fn run_hybrid(
    py: Python<'_>,
    instance: &PyInstance,
    seed: u64,
    events: Option<PathBuf>,
    iters: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    rho: Option<f64>,
    q: Option<f64>,
    ants: Option<usize>,
    tau0: Option<f64>,
    tau_max: Option<f64>,
    t: Option<f64>,
    x_max: Option<f64>,
    stagnation_window: Option<usize>,
    best_only_local_search: bool,
) -> PyResult<PyRunResult> {
    let sched = schedule(events)?;
    let d = HybridParams::default();
    let params = HybridParams {
        aco: aco_params(iters, alpha, beta, rho, q, ants, tau0, tau_max),
        t: t.unwrap_or(d.t),
        x_max,
        stagnation_window: match stagnation_window {
            Some(0) => None,
            Some(w) => Some(w),
            None => d.stagnation_window,
        },
        best_only_local_search,
    };
    let inner = py
        .detach(|| hybrid::run_hybrid(&instance.inner, &sched, &params, seed))
        .map_err(to_py)?;
    Ok(PyRunResult { inner })
}

/// Steepest-descent 2-opt improvement; returns `(ids, length)`.
#[pyfunction]
#[pyo3(signature = (instance, ids, max_rounds=None))]
fn improve_tour(
    instance: &PyInstance,
    ids: Vec<CityId>,
    max_rounds: Option<usize>,
) -> PyResult<(Vec<CityId>, f64)> {
    let inner = &instance.inner;
    let tour = Tour::from_ids(inner, &ids).map_err(to_py)?;
    let rounds = max_rounds.unwrap_or_else(|| localsearch::default_max_rounds(inner.len()));
    let out = localsearch::steepest_descent_improve(inner, &tour, rounds);
    Ok((out.city_ids(inner), out.length()))
}

/// Multi-start gradient descent on Python callables `f(x)` and `grad(x)`
/// over lists of floats. `step` is a fixed step size or `"decreasing"`.
/// Returns `(best_x, best_f, converged)`.
#[pyfunction]
#[pyo3(signature = (f, grad, init_box, seed=0, *, step=None, epsilon=1e-6, max_iters=10_000, restarts=3))]
#[allow(clippy::too_many_arguments)]
fn minimize(
    py: Python<'_>,
    f: Py<PyAny>,
    grad: Py<PyAny>,
    init_box: Vec<(f64, f64)>,
    seed: u64,
    step: Option<Bound<'_, PyAny>>,
    epsilon: f64,
    max_iters: usize,
    restarts: usize,
) -> PyResult<(Vec<f64>, f64, bool)> {
    let step = match step {
        None => StepSchedule::Fixed(0.4),
        Some(s) => match s.extract::<f64>() {
            Ok(t) => StepSchedule::Fixed(t),
            Err(_) if s.extract::<String>().is_ok_and(|v| v == "decreasing") => {
                StepSchedule::Decreasing
            }
            Err(_) => {
                return Err(PyValueError::new_err(
                    "step must be a number or \"decreasing\"",
                ))
            }
        },
    };
    let cfg = DescentConfig {
        step,
        epsilon,
        max_iters,
        restarts,
        init_box,
    };
    // the first Python exception aborts the search by poisoning the value
    let failure: RefCell<Option<PyErr>> = RefCell::new(None);
    let record = |e: PyErr| {
        failure.borrow_mut().get_or_insert(e);
    };
    let field = FnField {
        dim: cfg.init_box.len(),
        eval: |x: &[f64]| match f
            .call1(py, (x.to_vec(),))
            .and_then(|v| v.extract::<f64>(py))
        {
            Ok(v) => v,
            Err(e) => {
                record(e);
                f64::NAN
            }
        },
        grad: |x: &[f64]| match grad
            .call1(py, (x.to_vec(),))
            .and_then(|v| v.extract::<Vec<f64>>(py))
        {
            Ok(g) => g,
            Err(e) => {
                record(e);
                vec![f64::NAN; x.len()]
            }
        },
    };
    let res = graddesc::minimize(&field, &cfg, seed);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let res = res.map_err(to_py)?;
    Ok((res.best_x, res.best_f, res.converged))
}

#[pymodule]
#[pyo3(name = "dtsp")]
fn dtsp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run_aco, m)?)?;
    m.add_function(wrap_pyfunction!(run_hybrid, m)?)?;
    m.add_function(wrap_pyfunction!(improve_tour, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    Ok(())
}

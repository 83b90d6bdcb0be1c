//! Python bindings for the `riskcr` solvers.
//!
//! Risk levels are plain floats in `[0, 1]`. Strategies are opaque objects
//! returned by the solvers; evaluate them with the matching `*_dcr` function.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use riskcr_core::one_max_search::{self as oms, OmsProblem};
use riskcr_core::simulation::{self, SimConfig};
use riskcr_core::ski_rental_continuous as csr;
use riskcr_core::ski_rental_discrete as dsr;
use riskcr_core::sweep::{self, Problem, Series, SweepSpec};
use riskcr_core::{DcrReport, Error, Orientation, RiskLevel, SolverConfig, WeightedOutcomes};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::Infeasible | Error::Unbounded | Error::GridTooCoarse { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn risk(delta: f64) -> PyResult<RiskLevel> {
    RiskLevel::new(delta).map_err(to_py)
}

fn config(grid_points: Option<usize>, tol: Option<f64>) -> PyResult<SolverConfig> {
    let mut cfg = SolverConfig::default();
    if let Some(n) = grid_points {
        cfg.grid_points = n;
    }
    if let Some(t) = tol {
        cfg.bisect_tol = t;
    }
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Worst-case ratio of a strategy with the per-decision ratios behind it.
#[pyclass(name = "DcrReport", frozen, get_all)]
pub struct PyDcrReport {
    decisions: Vec<f64>,
    ratios: Vec<f64>,
    sup_ratio: f64,
    argmax_decision: f64,
}

impl From<DcrReport> for PyDcrReport {
    fn from(r: DcrReport) -> Self {
        PyDcrReport {
            decisions: r.decisions,
            ratios: r.ratios,
            sup_ratio: r.sup_ratio,
            argmax_decision: r.argmax_decision,
        }
    }
}

#[pymethods]
impl PyDcrReport {
    fn __repr__(&self) -> String {
        format!("DcrReport(sup_ratio={}, argmax_decision={})", self.sup_ratio, self.argmax_decision)
    }
}

/// Monte Carlo estimate against the analytic ratios.
#[pyclass(name = "SimReport", frozen)]
pub struct PySimReport(simulation::SimReport);

impl From<simulation::SimReport> for PySimReport {
    fn from(r: simulation::SimReport) -> Self {
        PySimReport(r)
    }
}

#[pymethods]
impl PySimReport {
    #[getter]
    fn decisions(&self) -> Vec<f64> {
        self.0.decisions.clone()
    }

    #[getter]
    fn empirical_ratios(&self) -> Vec<f64> {
        self.0.empirical_ratios.clone()
    }

    #[getter]
    fn analytic_ratios(&self) -> Vec<f64> {
        self.0.analytic_ratios.clone()
    }

    #[getter]
    fn max_abs_gap(&self) -> f64 {
        self.0.max_abs_gap
    }

    #[getter]
    fn stderr_estimate(&self) -> f64 {
        self.0.stderr_estimate
    }

    #[pyo3(signature = (z = 3.0))]
    fn within(&self, z: f64) -> bool {
        self.0.within(z)
    }

    fn __repr__(&self) -> String {
        format!("SimReport(max_abs_gap={}, stderr_estimate={})", self.0.max_abs_gap, self.0.stderr_estimate)
    }
}

/// Buying-time distribution for continuous ski rental, as an inverse CDF on `[0, 1]`.
#[pyclass(name = "CsrStrategy", frozen)]
pub struct PyCsrStrategy(csr::CsrStrategy);

#[pymethods]
impl PyCsrStrategy {
    #[new]
    fn new(nodes: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let grid = riskcr_core::MonotoneGrid::new(nodes, values).map_err(to_py)?;
        csr::CsrStrategy::new(grid).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn deterministic() -> Self {
        Self(csr::CsrStrategy::deterministic())
    }

    #[staticmethod]
    fn uniform() -> Self {
        Self(csr::CsrStrategy::uniform())
    }

    fn inverse_cdf(&self, p: f64) -> f64 {
        self.0.inverse_cdf().eval(p)
    }

    fn cdf(&self, s: f64) -> f64 {
        self.0.cdf(s)
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.0.inverse_cdf().nodes().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.inverse_cdf().values().to_vec()
    }
}

/// Buying-day probabilities for discrete ski rental with buying cost `B`.
#[pyclass(name = "DiscreteStrategy", frozen)]
pub struct PyDiscreteStrategy(dsr::DiscreteStrategy);

#[pymethods]
impl PyDiscreteStrategy {
    #[new]
    fn new(buy_cost: usize, probs: Vec<f64>) -> PyResult<Self> {
        dsr::DiscreteStrategy::new(buy_cost, probs).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn deterministic(buy_cost: usize) -> PyResult<Self> {
        dsr::DiscreteStrategy::deterministic(buy_cost).map(Self).map_err(to_py)
    }

    #[getter]
    fn buy_cost(&self) -> usize {
        self.0.buy_cost()
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.0.probs().to_vec()
    }
}

/// Reservation-price distribution for one-max search on `[L, U]`.
#[pyclass(name = "OmsStrategy", frozen)]
pub struct PyOmsStrategy(oms::OmsStrategy);

#[pymethods]
impl PyOmsStrategy {
    #[staticmethod]
    fn deterministic(low: f64, high: f64, price: f64) -> PyResult<Self> {
        let p = OmsProblem::new(low, high).map_err(to_py)?;
        oms::OmsStrategy::deterministic(p, price).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn uniform(low: f64, high: f64) -> PyResult<Self> {
        let p = OmsProblem::new(low, high).map_err(to_py)?;
        oms::OmsStrategy::uniform(p).map(Self).map_err(to_py)
    }

    #[getter]
    fn low(&self) -> f64 {
        self.0.problem().low()
    }

    #[getter]
    fn high(&self) -> f64 {
        self.0.problem().high()
    }

    fn inverse_cdf(&self, p: f64) -> f64 {
        self.0.inverse_cdf().eval(p)
    }

    fn cdf(&self, v: f64) -> f64 {
        self.0.cdf(v)
    }
}

/// CVaR of a discrete distribution; `reward=True` averages the lower tail.
#[pyfunction]
#[pyo3(signature = (outcomes, probs, delta, reward = false))]
fn cvar(outcomes: Vec<f64>, probs: Vec<f64>, delta: f64, reward: bool) -> PyResult<f64> {
    let w = WeightedOutcomes::new(outcomes, probs).map_err(to_py)?;
    let o = if reward { Orientation::Reward } else { Orientation::Cost };
    Ok(riskcr_core::risk::cvar_discrete(&w, risk(delta)?, o))
}

#[pyfunction]
#[pyo3(signature = (delta, grid_points = None, tol = None))]
fn csr_solve(delta: f64, grid_points: Option<usize>, tol: Option<f64>) -> PyResult<(f64, PyCsrStrategy)> {
    let (a, s) = csr::csr_solve_optimal(risk(delta)?, &config(grid_points, tol)?).map_err(to_py)?;
    Ok((a, PyCsrStrategy(s)))
}

#[pyfunction]
fn csr_dcr(strategy: &PyCsrStrategy, delta: f64) -> PyResult<PyDcrReport> {
    csr::csr_dcr(&strategy.0, risk(delta)?, &SolverConfig::default())
        .map(Into::into)
        .map_err(to_py)
}

/// `(lower, suboptimal)` bounds on the optimal continuous DCR.
#[pyfunction]
fn csr_bounds(delta: f64) -> PyResult<(f64, f64)> {
    let d = risk(delta)?;
    Ok((csr::csr_lower_bound(d), csr::csr_suboptimal_dcr(d)))
}

#[pyfunction]
#[pyo3(signature = (buy_cost, delta, grid_points = None, tol = None))]
fn dsr_solve(buy_cost: usize, delta: f64, grid_points: Option<usize>, tol: Option<f64>) -> PyResult<(f64, PyDiscreteStrategy)> {
    let (a, s) = dsr::dsr_solve_optimal(buy_cost, risk(delta)?, &config(grid_points, tol)?).map_err(to_py)?;
    Ok((a, PyDiscreteStrategy(s)))
}

#[pyfunction]
fn dsr_dcr(strategy: &PyDiscreteStrategy, delta: f64) -> PyResult<PyDcrReport> {
    dsr::dsr_dcr(&strategy.0, risk(delta)?).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (high, delta, low = 1.0, grid_points = None, tol = None))]
fn oms_solve(high: f64, delta: f64, low: f64, grid_points: Option<usize>, tol: Option<f64>) -> PyResult<(f64, PyOmsStrategy)> {
    let p = OmsProblem::new(low, high).map_err(to_py)?;
    let (a, s) = oms::oms_solve_alpha(&p, risk(delta)?, &config(grid_points, tol)?).map_err(to_py)?;
    Ok((a, PyOmsStrategy(s)))
}

#[pyfunction]
fn oms_dcr(strategy: &PyOmsStrategy, delta: f64) -> PyResult<PyDcrReport> {
    let p = *strategy.0.problem();
    oms::oms_dcr(&strategy.0, &p, risk(delta)?, &SolverConfig::default())
        .map(Into::into)
        .map_err(to_py)
}

/// `(lower, upper)` bounds on the optimal one-max DCR.
#[pyfunction]
#[pyo3(signature = (high, delta, low = 1.0))]
fn oms_bounds(high: f64, delta: f64, low: f64) -> PyResult<(f64, f64)> {
    let p = OmsProblem::new(low, high).map_err(to_py)?;
    let d = risk(delta)?;
    Ok((
        oms::oms_lower_bound_root(&p, d).map_err(to_py)?,
        oms::oms_upper_bound_root(&p, d).map_err(to_py)?,
    ))
}

fn sim_config(samples: usize, seed: u64, points: usize) -> PyResult<SimConfig> {
    SimConfig::new(samples, seed, points).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (strategy, delta, samples = 1_000_000, seed = 1, points = 20))]
fn simulate_csr(py: Python<'_>, strategy: &PyCsrStrategy, delta: f64, samples: usize, seed: u64, points: usize) -> PyResult<PySimReport> {
    let (d, cfg) = (risk(delta)?, sim_config(samples, seed, points)?);
    py.detach(|| simulation::simulate_csr(&strategy.0, d, &cfg))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (strategy, delta, samples = 1_000_000, seed = 1))]
fn simulate_dsr(py: Python<'_>, strategy: &PyDiscreteStrategy, delta: f64, samples: usize, seed: u64) -> PyResult<PySimReport> {
    let (d, cfg) = (risk(delta)?, sim_config(samples, seed, 20)?);
    py.detach(|| simulation::simulate_dsr(&strategy.0, d, &cfg))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (strategy, delta, samples = 1_000_000, seed = 1, points = 20))]
fn simulate_oms(py: Python<'_>, strategy: &PyOmsStrategy, delta: f64, samples: usize, seed: u64, points: usize) -> PyResult<PySimReport> {
    let (d, cfg) = (risk(delta)?, sim_config(samples, seed, points)?);
    let p = *strategy.0.problem();
    py.detach(|| simulation::simulate_oms(&strategy.0, &p, d, &cfg))
        .map(Into::into)
        .map_err(to_py)
}

/// Sweeps δ for `problem` in `{"csr", "dsr", "oms"}` and returns the CSV text.
/// Missing series are empty cells.
#[pyfunction]
#[pyo3(signature = (problem, deltas, buy_cost = None, high = None, low = 1.0))]
fn sweep_csv(py: Python<'_>, problem: &str, deltas: Vec<f64>, buy_cost: Option<usize>, high: Option<f64>, low: f64) -> PyResult<String> {
    let problem = match (problem, buy_cost, high) {
        ("csr", _, _) => Problem::Csr,
        ("dsr", Some(b), _) => Problem::Dsr { buy_cost: b },
        ("oms", _, Some(u)) => Problem::Oms(OmsProblem::new(low, u).map_err(to_py)?),
        ("dsr", None, _) => return Err(PyValueError::new_err("dsr needs buy_cost")),
        ("oms", _, None) => return Err(PyValueError::new_err("oms needs high")),
        (other, _, _) => return Err(PyValueError::new_err(format!("unknown problem {other:?}"))),
    };
    let spec = SweepSpec::new(problem, deltas, Series::ALL.into_iter().collect()).map_err(to_py)?;
    let rows = py
        .detach(|| sweep::run_sweep(&spec, &SolverConfig::default()))
        .map_err(to_py)?;
    let mut out = Vec::new();
    sweep::write_sweep_csv(&rows, &mut out).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(String::from_utf8(out).expect("CSV is ASCII"))
}

#[pymodule]
fn riskcr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDcrReport>()?;
    m.add_class::<PySimReport>()?;
    m.add_class::<PyCsrStrategy>()?;
    m.add_class::<PyDiscreteStrategy>()?;
    m.add_class::<PyOmsStrategy>()?;
    m.add_function(wrap_pyfunction!(cvar, m)?)?;
    m.add_function(wrap_pyfunction!(csr_solve, m)?)?;
    m.add_function(wrap_pyfunction!(csr_dcr, m)?)?;
    m.add_function(wrap_pyfunction!(csr_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(dsr_solve, m)?)?;
    m.add_function(wrap_pyfunction!(dsr_dcr, m)?)?;
    m.add_function(wrap_pyfunction!(oms_solve, m)?)?;
    m.add_function(wrap_pyfunction!(oms_dcr, m)?)?;
    m.add_function(wrap_pyfunction!(oms_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_csr, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_dsr, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_oms, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}

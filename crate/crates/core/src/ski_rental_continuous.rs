//! Continuous-time ski rental with buying cost 1.
//!
//! A randomized strategy buys at time `X`, stored through its inverse CDF
//! `φ = F_X⁻¹` on `[0, 1]`. The adversary picks a season length `s ∈ (0, 1]`;
//! the algorithm pays `s` if `X > s` and `X + 1` otherwise, while the offline
//! optimum pays `min{s, 1}`.
//!
//! The optimal strategy at risk level δ solves the delay equation
//!
//! ```text
//! φ'(t) = (φ(t) - φ(t - (1-δ))) / (α(1-δ)),   t ∈ [1-δ, 1]
//! φ(t)  = ln(1 + t / ((α-1)(1-δ))),           t ∈ [0, 1-δ]
//! ```
//!
//! with `α` tuned by bisection so that `φ(1) = 1`.

use std::f64::consts::E;

use serde::Serialize;

use crate::dcr::{DcrReport, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::MonotoneGrid;
use crate::risk::RiskLevel;
use crate::special_functions::{constant_c, exp_integral_ei};

/// Largest strategy grid the solvers will allocate.
pub const MAX_GRID_POINTS: usize = 10_000_000;

const SUPPORT_TOL: f64 = 1e-9;

/// Relative spacing of the extra nodes placed on the logarithmic initial
/// segment, where `φ` bends sharply near zero for large δ.
const INITIAL_SEGMENT_STEP: f64 = 5e-5;

/// A randomized buying time, described by its inverse CDF.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsrStrategy {
    inverse_cdf: MonotoneGrid,
}

impl CsrStrategy {
    /// Wraps an inverse CDF whose values lie in `[0, 1]`.
    pub fn new(inverse_cdf: MonotoneGrid) -> Result<Self> {
        if inverse_cdf.first_value() < -SUPPORT_TOL || inverse_cdf.last_value() > 1.0 + SUPPORT_TOL
        {
            return Err(Error::InvalidDistribution(
                "buying times must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { inverse_cdf })
    }

    /// Always buys at time 1.
    pub fn deterministic() -> Self {
        Self {
            inverse_cdf: MonotoneGrid::constant(1.0).expect("constant grid is valid"),
        }
    }

    /// Buys at a uniformly random time in `[0, 1]`.
    pub fn uniform() -> Self {
        Self {
            inverse_cdf: MonotoneGrid::linear(0.0, 1.0).expect("linear grid is valid"),
        }
    }

    pub fn inverse_cdf(&self) -> &MonotoneGrid {
        &self.inverse_cdf
    }

    /// `F_X(s) = P(X <= s)`.
    pub fn cdf(&self, s: f64) -> f64 {
        self.inverse_cdf.cdf(s)
    }
}

fn check_decision(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain {
            function: "season length",
            value: s,
        });
    }
    Ok(())
}

/// Quantile function of the cost paid against season length `s`.
pub fn csr_cost_inverse_cdf(strategy: &CsrStrategy, s: f64, p: f64) -> f64 {
    let y = strategy.cdf(s);
    if p <= 1.0 - y {
        s
    } else {
        1.0 + strategy.inverse_cdf.eval(p + y - 1.0)
    }
}

/// `CVaR_δ[cost(s)] / min{s, 1}`.
pub fn csr_dcr_at(strategy: &CsrStrategy, s: f64, delta: RiskLevel) -> Result<f64> {
    check_decision(s)?;
    let phi = &strategy.inverse_cdf;
    let y = strategy.cdf(s);
    let cvar = if delta.is_one() {
        if y > 0.0 {
            1.0 + phi.eval(y)
        } else {
            s
        }
    } else {
        let tail = delta.tail();
        if y <= tail {
            ((tail - y) * s + y + phi.primitive(y)) / tail
        } else {
            (tail + phi.integral(y - tail, y)) / tail
        }
    };
    Ok(cvar / s.min(1.0))
}

/// Adversary decisions: a uniform grid on `(0, 1]` plus every strategy node
/// value at least one cell away from zero.
fn adversary_grid(strategy: &CsrStrategy, points: usize) -> Vec<f64> {
    let cell = 1.0 / points as f64;
    let mut s: Vec<f64> = (1..=points).map(|k| k as f64 * cell).collect();
    s.extend(
        strategy
            .inverse_cdf
            .values()
            .iter()
            .copied()
            .filter(|v| *v >= cell && *v <= 1.0),
    );
    s.push(1.0);
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

/// DCR of `strategy`, approximating the supremum over season lengths on the
/// adversary grid.
pub fn csr_dcr(strategy: &CsrStrategy, delta: RiskLevel, cfg: &SolverConfig) -> Result<DcrReport> {
    cfg.validate()?;
    let decisions = adversary_grid(strategy, cfg.adversary_grid_points);
    let ratios = decisions
        .iter()
        .map(|&s| csr_dcr_at(strategy, s, delta))
        .collect::<Result<Vec<_>>>()?;
    DcrReport::new(decisions, ratios)
}

/// Inverse CDF of the closed-form suboptimal strategy,
/// `(1 - e^{-cy/(1-δ)}) / (1 - e^{-c/(1-δ)})`.
pub fn suboptimal_inverse_cdf(delta: RiskLevel, y: f64) -> f64 {
    if delta.is_one() {
        return 1.0;
    }
    let rate = constant_c() / delta.tail();
    (-rate * y).exp_m1() / (-rate).exp_m1()
}

/// The closed-form suboptimal strategy tabulated on `grid_points` intervals;
/// deterministic buying at time 1 when δ = 1.
pub fn csr_suboptimal_strategy(delta: RiskLevel, grid_points: usize) -> Result<CsrStrategy> {
    if delta.is_one() {
        return Ok(CsrStrategy::deterministic());
    }
    let rate = constant_c() / delta.tail();
    let denom = (-rate).exp_m1();
    let grid = MonotoneGrid::from_fn_uniform(grid_points, |y| (-rate * y).exp_m1() / denom)?;
    CsrStrategy::new(grid)
}

/// DCR of the closed-form suboptimal strategy, `2 - 1/(e^{c/(1-δ)} - 1)`.
pub fn csr_suboptimal_dcr(delta: RiskLevel) -> f64 {
    if delta.is_one() {
        return 2.0;
    }
    2.0 - 1.0 / (constant_c() / delta.tail()).exp_m1()
}

/// Initial segment `ln(1 + t/((α-1)(1-δ)))` of the optimal inverse CDF.
fn initial_phi(alpha: f64, tail: f64, t: f64) -> f64 {
    (t / ((alpha - 1.0) * tail)).ln_1p()
}

/// Nodes and values of the delay-equation solution.
struct DdeSolution {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "α must exceed 1, got {alpha}"
        )));
    }
    Ok(())
}

fn dde_grid(delta: RiskLevel, cfg: &SolverConfig) -> Result<usize> {
    if delta.is_one() {
        return Err(Error::InvalidParameter(
            "the delay equation degenerates at δ = 1".into(),
        ));
    }
    let n = cfg.effective_grid_points(delta.value());
    let spacing = 1.0 / n as f64;
    if n > MAX_GRID_POINTS || spacing >= delta.tail() / 10.0 {
        return Err(Error::GridTooCoarse {
            spacing: 1.0 / n.min(MAX_GRID_POINTS) as f64,
            delay: delta.tail(),
        });
    }
    Ok(n)
}

/// Method of steps with a classical fourth-order Runge–Kutta step on a
/// uniform grid. The delay `1-δ` is added as a node, and the exact initial
/// segment also gets geometrically graded nodes near zero. Delayed values come from the exact initial
/// segment when they fall inside it and from linear interpolation of
/// already computed nodes otherwise.
fn integrate_dde(alpha: f64, delta: RiskLevel, n: usize) -> DdeSolution {
    let tail = delta.tail();
    let mut nodes: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    // Interpolation error of ln(1 + t/a) on a cell of width h is about
    // h²/(8(a+t)²), so cells of width ε(a+t) keep it small near t = 0.
    let a = (alpha - 1.0) * tail;
    let mut k = 1;
    loop {
        let t = a * (k as f64 * INITIAL_SEGMENT_STEP).exp_m1();
        if t >= tail {
            break;
        }
        nodes.push(t);
        k += 1;
    }
    nodes.push(tail);
    nodes.sort_by(f64::total_cmp);
    let min_gap = 1e-9 / n as f64;
    let mut merged: Vec<f64> = Vec::with_capacity(nodes.len());
    for t in nodes {
        match merged.last_mut() {
            // Keep the delay itself when it nearly coincides with a node.
            Some(prev) if t - *prev <= min_gap => {
                if t == tail {
                    *prev = tail;
                }
            }
            _ => merged.push(t),
        }
    }
    let mut nodes = merged;
    *nodes.last_mut().expect("nonempty") = 1.0;
    let start = nodes
        .iter()
        .position(|&t| t == tail)
        .expect("delay is a node");

    let mut values = Vec::with_capacity(nodes.len());
    for &t in &nodes[..=start] {
        values.push(initial_phi(alpha, tail, t));
    }

    let rate = 1.0 / (alpha * tail);
    for k in start..nodes.len() - 1 {
        let (t, h) = (nodes[k], nodes[k + 1] - nodes[k]);
        // Delayed arguments never exceed t, so only finished nodes are read.
        let delayed = |u: f64| -> f64 {
            let s = u - tail;
            if s <= tail {
                initial_phi(alpha, tail, s.max(0.0))
            } else {
                interpolate(&nodes[..=k], &values, s)
            }
        };
        let y = values[k];
        let d0 = delayed(t);
        let dm = delayed(t + 0.5 * h);
        let d1 = delayed(t + h);
        let k1 = rate * (y - d0);
        let k2 = rate * (y + 0.5 * h * k1 - dm);
        let k3 = rate * (y + 0.5 * h * k2 - dm);
        let k4 = rate * (y + h * k3 - d1);
        values.push(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    DdeSolution { nodes, values }
}

fn interpolate(nodes: &[f64], values: &[f64], s: f64) -> f64 {
    let last = nodes.len() - 1;
    if s >= nodes[last] {
        return values[last];
    }
    let k = nodes.partition_point(|&t| t <= s).saturating_sub(1).min(last - 1);
    let w = (s - nodes[k]) / (nodes[k + 1] - nodes[k]);
    values[k] + w * (values[k + 1] - values[k])
}

/// Solves the delay equation for a given `α`. Off the optimal `α` the result
/// is not clamped and `φ(1)` may differ from 1, so the returned strategy may
/// place mass outside `[0, 1]`.
pub fn csr_solve_dde(alpha: f64, delta: RiskLevel, cfg: &SolverConfig) -> Result<CsrStrategy> {
    check_alpha(alpha)?;
    cfg.validate()?;
    let n = dde_grid(delta, cfg)?;
    let sol = integrate_dde(alpha, delta, n);
    Ok(CsrStrategy {
        inverse_cdf: MonotoneGrid::new(sol.nodes, sol.values)?,
    })
}

/// `φ_α(1) - 1`; decreasing in `α`.
fn terminal_gap(alpha: f64, delta: RiskLevel, n: usize) -> f64 {
    let sol = integrate_dde(alpha, delta, n);
    sol.values[sol.values.len() - 1] - 1.0
}

/// Bisects `α` so that the delay-equation solution ends at `φ(1) = 1`.
///
/// Returns the upper end of the final bracket, whose solution satisfies
/// `φ(1) <= 1`; its last value is then set to exactly 1. At δ = 1 the answer
/// is the deterministic strategy with ratio 2.
pub fn csr_solve_optimal(delta: RiskLevel, cfg: &SolverConfig) -> Result<(f64, CsrStrategy)> {
    cfg.validate()?;
    if delta.is_one() {
        return Ok((2.0, CsrStrategy::deterministic()));
    }
    let n = dde_grid(delta, cfg)?;
    let gap = |a: f64| terminal_gap(a, delta, n);

    let (mut lo, mut hi) = (E / (E - 1.0), 2.0);
    if !(gap(lo) >= 0.0 && gap(hi) <= 0.0) {
        (lo, hi) = (1.01, 2.5);
        if !(gap(lo) >= 0.0 && gap(hi) <= 0.0) {
            return Err(Error::NonConvergence {
                solver: "csr bracket",
                iterations: 0,
            });
        }
    }
    let mut iterations = 0;
    while hi - lo >= cfg.bisect_tol {
        if iterations == cfg.max_bisect_iters {
            return Err(Error::NonConvergence {
                solver: "csr bisection",
                iterations,
            });
        }
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mut sol = integrate_dde(hi, delta, n);
    let last = sol.values.len() - 1;
    sol.values[last] = 1.0;
    let grid = MonotoneGrid::new(sol.nodes, sol.values)?;
    Ok((hi, CsrStrategy::new(grid)?))
}

/// Closed form of the optimal inverse CDF for δ <= 1/2, in terms of the
/// exponential integral.
pub fn csr_analytic_phi_small_delta(alpha: f64, delta: RiskLevel, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if delta.value() > 0.5 {
        return Err(Error::InvalidParameter(format!(
            "closed form requires δ <= 1/2, got {}",
            delta.value()
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain {
            function: "csr_analytic_phi_small_delta",
            value: t,
        });
    }
    let tail = delta.tail();
    if t <= tail {
        return Ok(initial_phi(alpha, tail, t));
    }
    let scale = alpha * tail;
    let prefactor = (-(2.0 * tail - t) / scale).exp();
    let bracket = E * exp_integral_ei(1.0 / alpha - 1.0)?
        - E * exp_integral_ei(((2.0 - alpha) * tail - t) / scale)?
        + (1.0 / alpha).exp() * (alpha / (alpha - 1.0)).ln();
    Ok(prefactor * bracket + initial_phi(alpha, tail, t - tail))
}

/// `max{e/(e-1), 2 - 1/2^{⌊1/(1-δ)⌋-1}}`, and 2 at δ = 1.
pub fn csr_lower_bound(delta: RiskLevel) -> f64 {
    if delta.is_one() {
        return 2.0;
    }
    // Nudge so that e.g. δ = 2/3 gives ⌊3⌋ despite rounding.
    let m = (1.0 / delta.tail() + 1e-9).floor();
    let deterministic_style = 2.0 - 0.5f64.powf(m - 1.0);
    deterministic_style.max(E / (E - 1.0))
}

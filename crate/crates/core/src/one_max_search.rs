//! One-max search with prices in `[L, U]` and fluctuation ratio `θ = U/L`.
//!
//! A random threshold algorithm draws `X` and sells at the first price at or
//! above it; if no such price comes it is forced to sell at `L`. Against a
//! sequence peaking at `v` the reward is `X` when `X <= v` and `L` otherwise,
//! and the offline optimum earns `v`. The DCR is the worst `v / CVaR_δ[reward]`.
//!
//! The threshold strategy with ratio `α` has inverse CDF
//!
//! ```text
//! φ(t) = L + (α-1)L Σ_{j>=0} α^j ([t - jδ]⁺)^j / ((1-δ)^j j!)
//! ```
//!
//! and `α` is chosen so that `φ(1) = U`.

use serde::Serialize;

use crate::dcr::{DcrReport, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::MonotoneGrid;
use crate::risk::RiskLevel;
use crate::special_functions::{lambert_w, BranchId};

const SUPPORT_TOL: f64 = 1e-9;
/// Relative bracket width at which the α and root bisections stop.
const ROOT_REL_TOL: f64 = 1e-13;
const ROOT_MAX_ITERS: usize = 200;
/// Guard for floor/ceil of `1/δ` at values that should be integers.
const INTEGER_NUDGE: f64 = 1e-9;

/// Price bounds `L <= U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmsProblem {
    low: f64,
    high: f64,
    fluctuation: f64,
}

impl OmsProblem {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && low.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lower price must be positive, got {low}"
            )));
        }
        if !(high >= low && high.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "upper price {high} must be finite and at least {low}"
            )));
        }
        Ok(Self {
            low,
            high,
            fluctuation: high / low,
        })
    }

    /// `L = 1, U = θ`.
    pub fn normalized(theta: f64) -> Result<Self> {
        Self::new(1.0, theta)
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn fluctuation(&self) -> f64 {
        self.fluctuation
    }
}

/// Random threshold in `[L, U]`, stored through its inverse CDF together with
/// the price bounds it was built for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmsStrategy {
    problem: OmsProblem,
    inverse_cdf: MonotoneGrid,
}

impl OmsStrategy {
    pub fn new(problem: OmsProblem, inverse_cdf: MonotoneGrid) -> Result<Self> {
        let slack = SUPPORT_TOL * problem.high;
        if inverse_cdf.first_value() < problem.low - slack
            || inverse_cdf.last_value() > problem.high + slack
        {
            return Err(Error::InvalidDistribution(
                "thresholds must lie in [L, U]".into(),
            ));
        }
        Ok(Self {
            problem,
            inverse_cdf,
        })
    }

    /// Fixed threshold `x`.
    pub fn deterministic(problem: OmsProblem, x: f64) -> Result<Self> {
        Self::new(problem, MonotoneGrid::constant(x)?)
    }

    /// Threshold uniform on `[L, U]`.
    pub fn uniform(problem: OmsProblem) -> Result<Self> {
        Self::new(problem, MonotoneGrid::linear(problem.low, problem.high)?)
    }

    pub fn problem(&self) -> &OmsProblem {
        &self.problem
    }

    pub fn inverse_cdf(&self) -> &MonotoneGrid {
        &self.inverse_cdf
    }

    /// `F_X(v) = P(X <= v)`.
    pub fn cdf(&self, v: f64) -> f64 {
        self.inverse_cdf.cdf(v)
    }
}

/// Reward CVaR when prices peak at `v`.
pub fn oms_reward_cvar_at(strategy: &OmsStrategy, v: f64, delta: RiskLevel) -> Result<f64> {
    let p = strategy.problem;
    if !(v >= p.low && v <= p.high) {
        return Err(Error::Domain {
            function: "peak price",
            value: v,
        });
    }
    let y = strategy.cdf(v);
    if delta.is_one() {
        return Ok(if y < 1.0 {
            p.low
        } else {
            strategy.inverse_cdf.first_value()
        });
    }
    if y <= delta.value() {
        return Ok(p.low);
    }
    let tail = delta.tail();
    Ok(((1.0 - y) * p.low + strategy.inverse_cdf.primitive(y - delta.value())) / tail)
}

/// DCR over peak prices: a uniform grid on `[L, U]`, every strategy node
/// value, and `U`.
pub fn oms_dcr(
    strategy: &OmsStrategy,
    problem: &OmsProblem,
    delta: RiskLevel,
    cfg: &SolverConfig,
) -> Result<DcrReport> {
    cfg.validate()?;
    if strategy.problem != *problem {
        return Err(Error::InvalidParameter(
            "strategy was built for different price bounds".into(),
        ));
    }
    let (l, u) = (problem.low, problem.high);
    let n = cfg.adversary_grid_points;
    let mut decisions: Vec<f64> = (0..=n).map(|k| l + (u - l) * k as f64 / n as f64).collect();
    decisions.extend(
        strategy
            .inverse_cdf
            .values()
            .iter()
            .copied()
            .filter(|v| *v >= l && *v <= u),
    );
    decisions.push(u);
    decisions.sort_by(f64::total_cmp);
    decisions.dedup();
    let ratios = decisions
        .iter()
        .map(|&v| oms_reward_cvar_at(strategy, v, delta).map(|r| v / r))
        .collect::<Result<Vec<_>>>()?;
    DcrReport::new(decisions, ratios)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "α must exceed 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Evaluates the piecewise-polynomial threshold inverse CDF. Terms are
/// formed in log space so that small δ (many terms) does not overflow.
pub fn oms_phi_analytic(alpha: f64, delta: RiskLevel, problem: &OmsProblem, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if delta.is_one() {
        return Err(Error::InvalidParameter(
            "the threshold family is undefined at δ = 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain {
            function: "oms_phi_analytic",
            value: t,
        });
    }
    let l = problem.low;
    if delta.value() == 0.0 {
        return Ok(l + (alpha - 1.0) * l * (alpha * t).exp());
    }
    let (d, tail) = (delta.value(), delta.tail());
    let log_rate = (alpha / tail).ln();
    let mut sum = 1.0;
    let mut log_fact = 0.0;
    let mut j = 1usize;
    loop {
        let shifted = t - j as f64 * d;
        if shifted <= 0.0 {
            break;
        }
        log_fact += (j as f64).ln();
        let jf = j as f64;
        sum += (jf * (log_rate + shifted.ln()) - log_fact).exp();
        j += 1;
    }
    Ok(l + (alpha - 1.0) * l * sum)
}

/// Tabulates the threshold strategy for `α` on a uniform grid with the kinks
/// `jδ` added as nodes.
pub fn oms_strategy_for_alpha(
    alpha: f64,
    delta: RiskLevel,
    problem: &OmsProblem,
    grid_points: usize,
) -> Result<OmsStrategy> {
    check_alpha(alpha)?;
    let d = delta.value();
    let mut kinks = Vec::new();
    if d > 0.0 {
        let mut j = 1;
        while (j as f64) * d < 1.0 {
            kinks.push(j as f64 * d);
            j += 1;
        }
    }
    if delta.is_one() {
        return Err(Error::InvalidParameter(
            "the threshold family is undefined at δ = 1".into(),
        ));
    }
    let grid = MonotoneGrid::from_fn_with_breakpoints(grid_points, &kinks, |t| {
        oms_phi_analytic(alpha, delta, problem, t).expect("arguments validated above")
    });
    OmsStrategy::new(*problem, grid?)
}

/// Bisects on an increasing function `g` over `[lo, hi]` with `g(lo) <= 0 <=
/// g(hi)`, returning the final `(lo, hi)`.
fn bisect_increasing(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64, solver: &'static str) -> Result<(f64, f64)> {
    for _ in 0..ROOT_MAX_ITERS {
        if hi - lo <= ROOT_REL_TOL * hi {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NonConvergence {
        solver,
        iterations: ROOT_MAX_ITERS,
    })
}

/// Finds `α` with `φ_α(1) = U` and returns the tabulated strategy.
///
/// The lower end of the final bracket is returned, so `φ(1) <= U`; the last
/// value is then pinned to `U`. At δ = 1 the answer is the deterministic
/// threshold `√(LU)` with ratio `√θ`; when `θ = 1` it is the constant `L`.
pub fn oms_solve_alpha(
    problem: &OmsProblem,
    delta: RiskLevel,
    cfg: &SolverConfig,
) -> Result<(f64, OmsStrategy)> {
    cfg.validate()?;
    let (l, u, theta) = (problem.low, problem.high, problem.fluctuation);
    if theta == 1.0 {
        return Ok((1.0, OmsStrategy::deterministic(*problem, l)?));
    }
    if delta.is_one() {
        let x = (l * u).sqrt().clamp(l, u);
        return Ok((theta.sqrt(), OmsStrategy::deterministic(*problem, x)?));
    }
    let gap = |a: f64| {
        oms_phi_analytic(a, delta, problem, 1.0).map_or(f64::NAN, |v| v / u - 1.0)
    };
    let (lo, hi) = (1.0 + 1e-9, theta.sqrt());
    // φ(1) grows with α; the top of the bracket reaches U exactly when
    // δ >= 1/2, so allow rounding there.
    if !(gap(lo) <= 0.0 && gap(hi) >= -1e-12) {
        return Err(Error::NonConvergence {
            solver: "oms bracket",
            iterations: 0,
        });
    }
    let (alpha, _) = bisect_increasing(lo, hi, gap, "oms bisection")?;
    if gap(alpha).abs() > cfg.bisect_tol.max(1e-9) {
        return Err(Error::NonConvergence {
            solver: "oms bisection",
            iterations: ROOT_MAX_ITERS,
        });
    }
    let s = oms_strategy_for_alpha(alpha, delta, problem, cfg.grid_points)?;
    let mut values = s.inverse_cdf.values().to_vec();
    let last = values.len() - 1;
    values[last] = u;
    let grid = MonotoneGrid::new(s.inverse_cdf.nodes().to_vec(), values)?;
    Ok((alpha, OmsStrategy::new(*problem, grid)?))
}

/// `(r - 1)(1 + r/n)^n - (θ - 1)`; `n = None` is the limit `(r - 1)e^r`.
pub fn bound_equation(r: f64, n: Option<f64>, theta: f64) -> f64 {
    let growth = match n {
        Some(n) => n * (r / n).ln_1p(),
        None => r,
    };
    (r - 1.0) * growth.exp() - (theta - 1.0)
}

fn bound_root(theta: f64, n: Option<f64>) -> Result<f64> {
    if theta == 1.0 {
        return Ok(1.0);
    }
    if n.is_none() {
        return Ok(1.0 + lambert_w(BranchId::Principal, (theta - 1.0) / std::f64::consts::E)?);
    }
    if n == Some(1.0) {
        return Ok(theta.sqrt());
    }
    let (lo, hi) = bisect_increasing(1.0, theta.sqrt(), |r| bound_equation(r, n, theta), "bound root")?;
    Ok(0.5 * (lo + hi))
}

/// Exponent `n̄(δ) = max{1, ⌊(⌊1/δ⌋ - 1)/2⌋}` of the upper-bound equation;
/// `None` at δ = 0.
pub fn upper_bound_exponent(delta: RiskLevel) -> Option<f64> {
    let d = delta.value();
    (d > 0.0).then(|| {
        let inner = (1.0 / d + INTEGER_NUDGE).floor();
        ((inner - 1.0) / 2.0).floor().max(1.0)
    })
}

/// Exponent `n(δ) = max{1, ⌈1/δ⌉ - 1}` of the lower-bound equation; `None`
/// at δ = 0.
pub fn lower_bound_exponent(delta: RiskLevel) -> Option<f64> {
    let d = delta.value();
    (d > 0.0).then(|| ((1.0 / d - INTEGER_NUDGE).ceil() - 1.0).max(1.0))
}

/// Root `r̄(δ)` bounding the achieved ratio from above.
pub fn oms_upper_bound_root(problem: &OmsProblem, delta: RiskLevel) -> Result<f64> {
    bound_root(problem.fluctuation, upper_bound_exponent(delta))
}

/// Root `r(δ)`: no algorithm has a smaller DCR.
pub fn oms_lower_bound_root(problem: &OmsProblem, delta: RiskLevel) -> Result<f64> {
    bound_root(problem.fluctuation, lower_bound_exponent(delta))
}

/// Price thresholds `p_i = 1 + (r-1)(1 + r/k)^{i-1}`, `i ∈ [k]`, of the
/// lower-bound construction, in units of `L`.
pub fn oms_kmax_thresholds(problem: &OmsProblem, delta: RiskLevel) -> Result<Vec<f64>> {
    let d = delta.value();
    if d <= 0.0 || delta.is_one() {
        return Err(Error::InvalidParameter(
            "thresholds are defined for 0 < δ < 1".into(),
        ));
    }
    let k = lower_bound_exponent(delta).expect("δ > 0");
    let r = oms_lower_bound_root(problem, delta)?;
    let ratio = 1.0 + r / k;
    Ok((0..k as usize)
        .map(|i| 1.0 + (r - 1.0) * ratio.powi(i as i32))
        .collect())
}

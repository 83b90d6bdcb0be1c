//! Discrete-time ski rental with integer buying cost `B >= 2`.
//!
//! A strategy buys on day `j ∈ [B]` with probability `p_j`. Against a season
//! of `i` days the cost ratio is `M_ij = (B + j - 1)/i` when `j <= i` and 1
//! otherwise; the DCR of `p` is the largest row-wise cost CVaR.
//!
//! Each row's CVaR is concave in `p` (a minimum over `t` of functions linear
//! in `p`), so the worst row is neither convex nor concave. The numeric
//! solver therefore majorizes: at the current `p` each row is replaced by its
//! tangent `t_i + Σ_j p_j (M_ij - t_i)⁺/(1-δ)` at its value-at-risk `t_i`, the
//! max of tangents is minimized by a linear program, and the process repeats
//! until it stalls. Several starting points are tried.

use serde::Serialize;

use crate::dcr::{DcrReport, SolverConfig};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::risk::{check_probabilities, cvar_discrete, greedy_fill, Orientation, RiskLevel, WeightedOutcomes};
use crate::ski_rental_continuous::CsrStrategy;
use crate::special_functions::constant_c;

const MM_MAX_ITERS: usize = 500;
const MM_IMPROVEMENT: f64 = 1e-13;

/// Purchase-day distribution over `[B]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteStrategy {
    buy_cost: usize,
    probs: Vec<f64>,
}

impl DiscreteStrategy {
    pub fn new(buy_cost: usize, probs: Vec<f64>) -> Result<Self> {
        check_buy_cost(buy_cost)?;
        if probs.len() != buy_cost {
            return Err(Error::InvalidDistribution(format!(
                "expected {buy_cost} probabilities, got {}",
                probs.len()
            )));
        }
        check_probabilities(&probs)?;
        Ok(Self { buy_cost, probs })
    }

    /// Buys on day `B` for sure.
    pub fn deterministic(buy_cost: usize) -> Result<Self> {
        check_buy_cost(buy_cost)?;
        let mut probs = vec![0.0; buy_cost];
        probs[buy_cost - 1] = 1.0;
        Ok(Self { buy_cost, probs })
    }

    pub fn uniform(buy_cost: usize) -> Result<Self> {
        check_buy_cost(buy_cost)?;
        Ok(Self {
            buy_cost,
            probs: vec![1.0 / buy_cost as f64; buy_cost],
        })
    }

    pub fn buy_cost(&self) -> usize {
        self.buy_cost
    }

    /// `probs()[j - 1]` is the probability of buying on day `j`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Renormalizes a nonnegative vector that sums to roughly one (as LP
    /// output does) before validating it.
    fn from_raw(buy_cost: usize, raw: &[f64]) -> Result<Self> {
        let clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidDistribution("all-zero strategy".into()));
        }
        Self::new(buy_cost, clipped.iter().map(|v| v / total).collect())
    }
}

fn check_buy_cost(b: usize) -> Result<()> {
    if b < 2 {
        return Err(Error::InvalidParameter(format!(
            "buying cost must be at least 2, got {b}"
        )));
    }
    Ok(())
}

/// Cost ratios of buying on day `j` against a season of `i` days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostMatrix {
    buy_cost: usize,
    /// Row-major, `entries[(i-1)·B + (j-1)] = M_ij`.
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(buy_cost: usize) -> Result<Self> {
        check_buy_cost(buy_cost)?;
        let b = buy_cost;
        let mut entries = Vec::with_capacity(b * b);
        for i in 1..=b {
            for j in 1..=b {
                entries.push(if j <= i {
                    (b + j - 1) as f64 / i as f64
                } else {
                    1.0
                });
            }
        }
        Ok(Self { buy_cost, entries })
    }

    pub fn buy_cost(&self) -> usize {
        self.buy_cost
    }

    /// Entry `M_ij` for `i, j ∈ [B]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i - 1) * self.buy_cost + (j - 1)]
    }

    /// Row `i` (1-based).
    pub fn row(&self, i: usize) -> &[f64] {
        let b = self.buy_cost;
        &self.entries[(i - 1) * b..i * b]
    }
}

fn row_outcomes(m: &CostMatrix, i: usize, probs: &[f64]) -> WeightedOutcomes {
    WeightedOutcomes::new(m.row(i).to_vec(), probs.to_vec())
        .expect("strategy probabilities are validated")
}

/// CVaR of the cost ratio when the season lasts `i` days.
pub fn dsr_dcr_at(strategy: &DiscreteStrategy, i: usize, delta: RiskLevel) -> Result<f64> {
    let m = CostMatrix::new(strategy.buy_cost)?;
    row_cvar(&m, strategy, i, delta)
}

fn row_cvar(m: &CostMatrix, strategy: &DiscreteStrategy, i: usize, delta: RiskLevel) -> Result<f64> {
    if i == 0 || i > m.buy_cost {
        return Err(Error::Domain {
            function: "season length",
            value: i as f64,
        });
    }
    Ok(cvar_discrete(
        &row_outcomes(m, i, &strategy.probs),
        delta,
        Orientation::Cost,
    ))
}

/// Exact DCR: the worst row over all season lengths in `[B]`.
pub fn dsr_dcr(strategy: &DiscreteStrategy, delta: RiskLevel) -> Result<DcrReport> {
    let m = CostMatrix::new(strategy.buy_cost)?;
    let ratios = (1..=m.buy_cost)
        .map(|i| row_cvar(&m, strategy, i, delta))
        .collect::<Result<Vec<_>>>()?;
    DcrReport::new((1..=m.buy_cost).map(|i| i as f64).collect(), ratios)
}

fn worst_row(m: &CostMatrix, probs: &[f64], delta: RiskLevel) -> f64 {
    (1..=m.buy_cost)
        .map(|i| cvar_discrete(&row_outcomes(m, i, probs), delta, Orientation::Cost))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The expectation-optimal ratio `C = 1/(1 - (1-1/B)^B)`.
pub fn expectation_ratio(buy_cost: usize) -> Result<f64> {
    check_buy_cost(buy_cost)?;
    let b = buy_cost as f64;
    Ok(1.0 / (1.0 - (1.0 - 1.0 / b).powi(buy_cost as i32)))
}

/// Largest δ for which the closed-form optimum applies,
/// `C(1-1/B)^{B-1}/B`, which is also its first-day probability.
pub fn dsr_analytic_threshold(buy_cost: usize) -> Result<f64> {
    let c = expectation_ratio(buy_cost)?;
    let b = buy_cost as f64;
    Ok(c * (1.0 - 1.0 / b).powi(buy_cost as i32 - 1) / b)
}

/// Strategy `p_j = (C/B)(1-1/B)^{B-j}`, optimal for every δ up to the
/// analytic threshold.
pub fn expectation_optimal_strategy(buy_cost: usize) -> Result<DiscreteStrategy> {
    let c = expectation_ratio(buy_cost)?;
    let b = buy_cost as f64;
    let probs: Vec<f64> = (1..=buy_cost)
        .map(|j| c / b * (1.0 - 1.0 / b).powi((buy_cost - j) as i32))
        .collect();
    DiscreteStrategy::from_raw(buy_cost, &probs)
}

/// Closed-form optimum `α = (C-δ)/(1-δ)` below the analytic threshold.
pub fn dsr_analytic_optimal(buy_cost: usize, delta: RiskLevel) -> Result<(f64, DiscreteStrategy)> {
    let threshold = dsr_analytic_threshold(buy_cost)?;
    if delta.value() > threshold {
        return Err(Error::InvalidParameter(format!(
            "δ = {} exceeds the closed-form threshold {threshold}",
            delta.value()
        )));
    }
    let c = expectation_ratio(buy_cost)?;
    let alpha = (c - delta.value()) / delta.tail();
    Ok((alpha, expectation_optimal_strategy(buy_cost)?))
}

/// Phase-transition bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseBounds {
    /// Below this δ randomization strictly beats buying on day `B`.
    pub improves_below: f64,
    /// From this δ on, buying on day `B` is optimal.
    pub deterministic_at_or_above: f64,
}

pub fn dsr_phase_bounds(buy_cost: usize) -> Result<PhaseBounds> {
    check_buy_cost(buy_cost)?;
    let log2_floor = (usize::BITS - 1 - buy_cost.leading_zeros()) as f64;
    Ok(PhaseBounds {
        improves_below: 1.0 - constant_c() / ((buy_cost + 1) as f64).ln(),
        deterministic_at_or_above: 1.0 - 1.0 / (2.0 * log2_floor + 1.0),
    })
}

/// Discretizes a continuous strategy (buying cost normalized to 1) to
/// buying cost `B`: day `j` receives the mass of `X ∈ ((j-1)/B, j/B]`, with
/// any atom at 0 going to day 1.
pub fn dsr_embed_csr(strategy: &CsrStrategy, buy_cost: usize) -> Result<DiscreteStrategy> {
    check_buy_cost(buy_cost)?;
    let b = buy_cost as f64;
    let mut prev = 0.0;
    let probs: Vec<f64> = (1..=buy_cost)
        .map(|j| {
            let cur = if j == buy_cost { 1.0 } else { strategy.cdf(j as f64 / b) };
            let p = (cur - prev).max(0.0);
            prev = cur.max(prev);
            p
        })
        .collect();
    DiscreteStrategy::from_raw(buy_cost, &probs)
}

/// Linear majorant of row `i` tangent at its value-at-risk under `probs`:
/// returns `(t_i, coefficients)` with the row CVaR bounded above by
/// `t_i + Σ_j coeff_j p_j` for every `p`.
fn tangent(m: &CostMatrix, i: usize, probs: &[f64], delta: RiskLevel) -> (f64, Vec<f64>) {
    let row = m.row(i);
    let w = row_outcomes(m, i, probs);
    let q = greedy_fill(&w, delta.tail(), Orientation::Cost);
    // The VaR is the smallest outcome receiving any tail mass.
    let t = row
        .iter()
        .zip(&q)
        .filter(|(_, q)| **q > 0.0)
        .map(|(x, _)| *x)
        .fold(f64::INFINITY, f64::min);
    let t = if t.is_finite() { t } else { row.iter().copied().fold(f64::NEG_INFINITY, f64::max) };
    let coeffs = row.iter().map(|x| (x - t).max(0.0) / delta.tail()).collect();
    (t, coeffs)
}

/// Minimizes the max of the given tangents over the simplex.
fn tangent_lp(b: usize, tangents: &[(f64, Vec<f64>)]) -> Result<Vec<f64>> {
    // Variables p_1..p_B, z.
    let mut objective = vec![0.0; b + 1];
    objective[b] = 1.0;
    let mut lp = LinearProgram::new(objective);
    for (t, coeffs) in tangents {
        let mut row = coeffs.clone();
        row.push(-1.0);
        lp.add_row(row, Relation::Le, -t);
    }
    let mut simplex = vec![1.0; b + 1];
    simplex[b] = 0.0;
    lp.add_row(simplex, Relation::Eq, 1.0);
    let sol = lp.solve()?;
    Ok(sol.x[..b].to_vec())
}

/// Majorize-minimize descent from `start`. Returns the final value and
/// probabilities.
fn descend(m: &CostMatrix, start: &[f64], delta: RiskLevel) -> Result<(f64, Vec<f64>)> {
    let b = m.buy_cost;
    let mut p = start.to_vec();
    let mut value = worst_row(m, &p, delta);
    for _ in 0..MM_MAX_ITERS {
        let tangents: Vec<_> = (1..=b).map(|i| tangent(m, i, &p, delta)).collect();
        let raw = tangent_lp(b, &tangents)?;
        let candidate = DiscreteStrategy::from_raw(b, &raw)?.probs;
        let v = worst_row(m, &candidate, delta);
        if v < value - MM_IMPROVEMENT {
            p = candidate;
            value = v;
        } else {
            return Ok((value, p));
        }
    }
    Err(Error::NonConvergence {
        solver: "dsr majorize-minimize",
        iterations: MM_MAX_ITERS,
    })
}

/// Numerically minimizes the DCR over all purchase-day distributions.
///
/// At δ = 1 the answer is exact: buying on day `B`, ratio `2 - 1/B`.
/// Otherwise the majorize-minimize descent runs from the uniform strategy,
/// the expectation-optimal strategy, the discretized closed-form continuous
/// strategy and the day-`B` point mass, and the best result is returned.
pub fn dsr_solve_optimal(
    buy_cost: usize,
    delta: RiskLevel,
    cfg: &SolverConfig,
) -> Result<(f64, DiscreteStrategy)> {
    check_buy_cost(buy_cost)?;
    cfg.validate()?;
    if delta.is_one() {
        let s = DiscreteStrategy::deterministic(buy_cost)?;
        return Ok((2.0 - 1.0 / buy_cost as f64, s));
    }
    let m = CostMatrix::new(buy_cost)?;
    let continuous = crate::ski_rental_continuous::csr_suboptimal_strategy(delta, 4 * buy_cost.max(1000))?;
    let starts = [
        DiscreteStrategy::uniform(buy_cost)?,
        expectation_optimal_strategy(buy_cost)?,
        dsr_embed_csr(&continuous, buy_cost)?,
        DiscreteStrategy::deterministic(buy_cost)?,
    ];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &starts {
        let (v, p) = descend(&m, &s.probs, delta)?;
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, p));
        }
    }
    let (value, probs) = best.expect("at least one start");
    Ok((value, DiscreteStrategy::new(buy_cost, probs)?))
}

/// Entropic mirror descent on the worst-row CVaR with step `1/√k`, started
/// from the uniform strategy. Returns the best value seen and its strategy.
///
/// At δ = 0 the objective is convex and this converges to the optimum, which
/// makes it a cross-check of [`dsr_solve_optimal`]. For δ > 0 the rows are
/// concave in `p` and the iteration can stall at a local point, so the
/// result is only an upper bound on the optimum.
pub fn dsr_mirror_descent(
    buy_cost: usize,
    delta: RiskLevel,
    iterations: usize,
) -> Result<(f64, DiscreteStrategy)> {
    check_buy_cost(buy_cost)?;
    let m = CostMatrix::new(buy_cost)?;
    let b = buy_cost;
    let mut p = vec![1.0 / b as f64; b];
    let mut best = (worst_row(&m, &p, delta), p.clone());
    for k in 1..=iterations {
        // Supergradient of the active row at its value-at-risk.
        let (mut value, mut active) = (f64::NEG_INFINITY, 1);
        for i in 1..=b {
            let v = cvar_discrete(&row_outcomes(&m, i, &p), delta, Orientation::Cost);
            if v > value {
                value = v;
                active = i;
            }
        }
        if value < best.0 {
            best = (value, p.clone());
        }
        let (_, g) = if delta.is_one() {
            let row = m.row(active);
            (0.0, row.to_vec())
        } else {
            tangent(&m, active, &p, delta)
        };
        let step = 1.0 / (k as f64).sqrt();
        let gmax = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (pj, gj) in p.iter_mut().zip(&g) {
            *pj *= (-step * (gj - gmax)).exp();
            total += *pj;
        }
        for pj in p.iter_mut() {
            *pj = (*pj / total).max(1e-300);
        }
    }
    let v = worst_row(&m, &p, delta);
    if v < best.0 {
        best = (v, p);
    }
    Ok((best.0, DiscreteStrategy::from_raw(b, &best.1)?))
}

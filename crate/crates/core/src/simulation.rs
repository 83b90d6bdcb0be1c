//! Monte Carlo cross-checks of the analytic DCR evaluators.
//!
//! Thresholds are drawn by inverse-transform sampling. Each adversary
//! decision gets its own ChaCha8 stream (seeded from [`SimConfig::seed`],
//! stream number = decision index), so estimates are independent across
//! decisions and identical whether or not they run in parallel.
//!
//! Standard errors come from batch means: the sample is cut into
//! [`BATCHES`] equal batches, the ratio is recomputed on each, and the spread
//! of those values gives the error of the full-sample estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::MonotoneGrid;
use crate::one_max_search::{oms_reward_cvar_at, OmsProblem, OmsStrategy};
use crate::risk::{cvar_empirical_in_place, Orientation, RiskLevel};
use crate::ski_rental_continuous::{csr_dcr_at, CsrStrategy};
use crate::ski_rental_discrete::{dsr_dcr_at, CostMatrix, DiscreteStrategy};

/// Smallest sample size accepted for statistical comparisons.
pub const MIN_SAMPLES: usize = 1000;
/// Number of batches in the batch-means error estimate.
pub const BATCHES: usize = 20;
/// Absolute slack for evaluator roundoff in [`SimReport::within`].
pub const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub samples: usize,
    pub seed: u64,
    /// Adversary decisions on the uniform grid (continuous problems only;
    /// discrete ski rental always uses every day in `[B]`).
    pub adversary_points: usize,
}

impl SimConfig {
    pub fn new(samples: usize, seed: u64, adversary_points: usize) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "at least {MIN_SAMPLES} samples are needed, got {samples}"
            )));
        }
        if adversary_points == 0 {
            return Err(Error::InvalidParameter(
                "need at least one adversary decision".into(),
            ));
        }
        Ok(Self {
            samples,
            seed,
            adversary_points,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub decisions: Vec<f64>,
    pub empirical_ratios: Vec<f64>,
    pub analytic_ratios: Vec<f64>,
    pub max_abs_gap: f64,
    /// Largest batch-means standard error over the decisions.
    pub stderr_estimate: f64,
}

impl SimReport {
    fn from_rows(rows: Vec<(f64, Estimate, f64)>) -> Self {
        let mut report = SimReport {
            decisions: Vec::with_capacity(rows.len()),
            empirical_ratios: Vec::with_capacity(rows.len()),
            analytic_ratios: Vec::with_capacity(rows.len()),
            max_abs_gap: 0.0,
            stderr_estimate: 0.0,
        };
        for (decision, est, analytic) in rows {
            report.decisions.push(decision);
            report.empirical_ratios.push(est.value);
            report.analytic_ratios.push(analytic);
            report.max_abs_gap = report.max_abs_gap.max((est.value - analytic).abs());
            report.stderr_estimate = report.stderr_estimate.max(est.stderr);
        }
        report
    }

    /// Gaps of `empirical - analytic` per decision.
    pub fn gaps(&self) -> Vec<f64> {
        self.empirical_ratios
            .iter()
            .zip(&self.analytic_ratios)
            .map(|(e, a)| e - a)
            .collect()
    }

    /// Whether the largest gap lies within `z` standard errors of zero, up to
    /// floating-point roundoff (noise-free cases have zero standard error).
    pub fn within(&self, z: f64) -> bool {
        self.max_abs_gap <= z * self.stderr_estimate + ROUNDOFF
    }
}

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws `n` values `grid(u)` with `u` uniform on `[0, 1)`.
pub fn sample_inverse_cdf(grid: &MonotoneGrid, n: usize, seed: u64) -> Vec<f64> {
    sample_stream(grid, n, &mut stream(seed, 0))
}

fn sample_stream(grid: &MonotoneGrid, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| grid.eval(rng.random::<f64>())).collect()
}

struct Estimate {
    value: f64,
    stderr: f64,
}

/// Ratio `to_ratio(CVaR)` on the whole sample and its batch-means error.
fn estimate(outcomes: &mut [f64], delta: RiskLevel, o: Orientation, to_ratio: impl Fn(f64) -> f64) -> Estimate {
    let size = outcomes.len() / BATCHES;
    let batch_values: Vec<f64> = outcomes
        .chunks(size)
        .take(BATCHES)
        .map(|chunk| {
            let mut buf = chunk.to_vec();
            to_ratio(cvar_empirical_in_place(&mut buf, delta, o))
        })
        .collect();
    let value = to_ratio(cvar_empirical_in_place(outcomes, delta, o));
    let k = batch_values.len() as f64;
    let mean = batch_values.iter().sum::<f64>() / k;
    let var = batch_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Estimate {
        value,
        stderr: (var / k).sqrt(),
    }
}

fn uniform_decisions(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (1..=points)
        .map(|k| lo + (hi - lo) * k as f64 / points as f64)
        .collect()
}

/// Realized cost `s·[x > s] + (x + 1)·[x <= s]`.
pub fn simulate_csr(strategy: &CsrStrategy, delta: RiskLevel, cfg: &SimConfig) -> Result<SimReport> {
    let decisions = uniform_decisions(0.0, 1.0, cfg.adversary_points);
    let rows = decisions
        .par_iter()
        .enumerate()
        .map(|(k, &s)| {
            let mut rng = stream(cfg.seed, k);
            let mut costs = sample_stream(strategy.inverse_cdf(), cfg.samples, &mut rng);
            for x in costs.iter_mut() {
                *x = if *x <= s { *x + 1.0 } else { s };
            }
            let opt = s.min(1.0);
            let est = estimate(&mut costs, delta, Orientation::Cost, |c| c / opt);
            Ok((s, est, csr_dcr_at(strategy, s, delta)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimReport::from_rows(rows))
}

/// Realized cost ratio `M_ij` for season `i` and sampled purchase day `j`.
pub fn simulate_dsr(strategy: &DiscreteStrategy, delta: RiskLevel, cfg: &SimConfig) -> Result<SimReport> {
    let b = strategy.buy_cost();
    let m = CostMatrix::new(b)?;
    let mut cumulative = Vec::with_capacity(b);
    let mut acc = 0.0;
    for p in strategy.probs() {
        acc += p;
        cumulative.push(acc);
    }
    let rows = (1..=b)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i - 1);
            let row = m.row(i);
            let mut costs: Vec<f64> = (0..cfg.samples)
                .map(|_| {
                    let u: f64 = rng.random();
                    let j = cumulative.partition_point(|&c| c <= u).min(b - 1);
                    row[j]
                })
                .collect();
            let est = estimate(&mut costs, delta, Orientation::Cost, |c| c);
            Ok((i as f64, est, dsr_dcr_at(strategy, i, delta)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimReport::from_rows(rows))
}

/// Realized reward `x·[x <= v] + L·[x > v]`; the ratio is `v / CVaR`.
pub fn simulate_oms(
    strategy: &OmsStrategy,
    problem: &OmsProblem,
    delta: RiskLevel,
    cfg: &SimConfig,
) -> Result<SimReport> {
    if strategy.problem() != problem {
        return Err(Error::InvalidParameter(
            "strategy was built for different price bounds".into(),
        ));
    }
    let (l, u) = (problem.low(), problem.high());
    let decisions = uniform_decisions(l, u, cfg.adversary_points);
    let rows = decisions
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut rng = stream(cfg.seed, k);
            let mut rewards = sample_stream(strategy.inverse_cdf(), cfg.samples, &mut rng);
            for x in rewards.iter_mut() {
                if *x > v {
                    *x = l;
                }
            }
            let est = estimate(&mut rewards, delta, Orientation::Reward, |r| v / r);
            let analytic = v / oms_reward_cvar_at(strategy, v, delta)?;
            Ok((v, est, analytic))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimReport::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_floor() {
        assert!(SimConfig::new(10, 1, 5).is_err());
        assert!(SimConfig::new(1000, 1, 0).is_err());
        assert!(SimConfig::new(1000, 1, 5).is_ok());
    }

    #[test]
    fn constant_grid_samples() {
        let g = MonotoneGrid::constant(0.5).unwrap();
        assert!(sample_inverse_cdf(&g, 100, 3).iter().all(|&x| x == 0.5));
    }

    #[test]
    fn same_seed_same_samples() {
        let g = MonotoneGrid::linear(0.0, 1.0).unwrap();
        assert_eq!(sample_inverse_cdf(&g, 1000, 42), sample_inverse_cdf(&g, 1000, 42));
        assert_ne!(sample_inverse_cdf(&g, 1000, 42), sample_inverse_cdf(&g, 1000, 43));
    }

    #[test]
    fn deterministic_csr_is_exact() {
        let cfg = SimConfig::new(1000, 1, 4).unwrap();
        let r = simulate_csr(&CsrStrategy::deterministic(), RiskLevel::new(0.3).unwrap(), &cfg).unwrap();
        assert_eq!(*r.empirical_ratios.last().unwrap(), 2.0);
        assert!(r.max_abs_gap < 1e-12);
        assert!(r.within(3.0));
    }

    #[test]
    fn point_mass_dsr_is_exact() {
        let s = DiscreteStrategy::deterministic(4).unwrap();
        let cfg = SimConfig::new(1000, 9, 1).unwrap();
        let r = simulate_dsr(&s, RiskLevel::new(0.5).unwrap(), &cfg).unwrap();
        assert_eq!(r.decisions, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.empirical_ratios, vec![1.0, 1.0, 1.0, 7.0 / 4.0]);
        assert_eq!(r.max_abs_gap, 0.0);
    }

    #[test]
    fn oms_below_support_earns_low_price() {
        let p = OmsProblem::new(1.0, 100.0).unwrap();
        let s = OmsStrategy::deterministic(p, 10.0).unwrap();
        let cfg = SimConfig::new(1000, 5, 99).unwrap();
        let r = simulate_oms(&s, &p, RiskLevel::ONE, &cfg).unwrap();
        assert_eq!(r.empirical_ratios[0], 2.0);
        assert_eq!(*r.empirical_ratios.last().unwrap(), 10.0);
        assert_eq!(r.max_abs_gap, 0.0);
    }
}

//! Conditional value-at-risk over discrete distributions, tabulated inverse
//! CDFs and empirical samples.
//!
//! Two orientations are supported. For a loss (`Cost`) the CVaR at level δ is
//! the mean of the worst, i.e. largest, `(1-δ)` fraction of outcomes:
//!
//! ```text
//! CVaR_δ[X] = 1/(1-δ) ∫_δ^1 F⁻¹(p) dp
//! ```
//!
//! For a gain (`Reward`) it is the mean of the smallest `(1-δ)` fraction,
//! `1/(1-δ) ∫_0^{1-δ} F⁻¹(p) dp`. At δ = 1 both are defined as the essential
//! supremum / infimum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::MonotoneGrid;

const PROB_SUM_TOL: f64 = 1e-12;

/// Risk level δ ∈ [0, 1]: δ = 0 is the plain expectation, δ = 1 the worst case.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct RiskLevel(f64);

impl RiskLevel {
    pub fn new(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "risk level must lie in [0, 1], got {delta}"
            )));
        }
        Ok(Self(delta))
    }

    pub const ZERO: RiskLevel = RiskLevel(0.0);
    pub const ONE: RiskLevel = RiskLevel(1.0);

    pub fn value(self) -> f64 {
        self.0
    }

    /// Tail mass `1 - δ`.
    pub fn tail(self) -> f64 {
        1.0 - self.0
    }

    pub fn is_one(self) -> bool {
        self.0 >= 1.0
    }
}

/// Which tail CVaR averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// Losses: average the largest outcomes.
    Cost,
    /// Gains: average the smallest outcomes.
    Reward,
}

/// A finitely supported distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedOutcomes {
    outcomes: Vec<f64>,
    probs: Vec<f64>,
}

impl WeightedOutcomes {
    pub fn new(outcomes: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        check_probabilities(&probs)?;
        if outcomes.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        if outcomes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("outcomes must be finite".into()));
        }
        Ok(Self { outcomes, probs })
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.outcomes
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }
}

/// Validates a probability vector: nonempty, nonnegative, summing to one.
pub(crate) fn check_probabilities(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("no outcomes".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}

/// Greedy maximizer of `Σ qⱼ·xⱼ` over `0 <= q <= p, Σq = budget`: mass is
/// poured into outcomes in order of decreasing value (ties by ascending
/// index) until the budget is spent. For the reward orientation the order is
/// increasing value, which minimizes instead.
///
/// Returns the weights `q`.
pub fn greedy_fill(w: &WeightedOutcomes, budget: f64, o: Orientation) -> Vec<f64> {
    let mut order: Vec<usize> = (0..w.outcomes.len()).collect();
    match o {
        Orientation::Cost => order.sort_by(|&a, &b| w.outcomes[b].total_cmp(&w.outcomes[a])),
        Orientation::Reward => order.sort_by(|&a, &b| w.outcomes[a].total_cmp(&w.outcomes[b])),
    }
    let mut q = vec![0.0; w.outcomes.len()];
    let mut remaining = budget;
    for j in order {
        if remaining <= 0.0 {
            break;
        }
        let take = w.probs[j].min(remaining);
        q[j] = take;
        remaining -= take;
    }
    q
}

/// CVaR of a discrete distribution via the greedy subpopulation fill.
pub fn cvar_discrete(w: &WeightedOutcomes, delta: RiskLevel, o: Orientation) -> f64 {
    if delta.is_one() {
        let support = w
            .outcomes
            .iter()
            .zip(&w.probs)
            .filter(|(_, p)| **p > 0.0)
            .map(|(x, _)| *x);
        return match o {
            Orientation::Cost => support.fold(f64::NEG_INFINITY, f64::max),
            Orientation::Reward => support.fold(f64::INFINITY, f64::min),
        };
    }
    let budget = delta.tail();
    let q = greedy_fill(w, budget, o);
    let total: f64 = q.iter().zip(&w.outcomes).map(|(q, x)| q * x).sum();
    total / budget
}

/// CVaR of the random variable whose inverse CDF is the piecewise-linear
/// `phi`; the integral is exact for the interpolant.
pub fn cvar_from_inverse_cdf(phi: &MonotoneGrid, delta: RiskLevel, o: Orientation) -> f64 {
    if delta.is_one() {
        return match o {
            Orientation::Cost => phi.last_value(),
            Orientation::Reward => phi.first_value(),
        };
    }
    let tail = delta.tail();
    match o {
        Orientation::Cost => phi.integral(delta.value(), 1.0) / tail,
        Orientation::Reward => phi.integral(0.0, tail) / tail,
    }
}

/// Empirical CVaR. The tail holds exactly `(1-δ)·n` samples' worth of mass:
/// the `⌊(1-δ)n⌋` most extreme samples at full weight plus a fractional share
/// of the next one.
pub fn cvar_empirical(samples: &[f64], delta: RiskLevel, o: Orientation) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let mut buf = samples.to_vec();
    Ok(cvar_empirical_in_place(&mut buf, delta, o))
}

/// Same as [`cvar_empirical`] but reorders `samples` instead of copying.
///
/// # Panics
/// If `samples` is empty.
pub fn cvar_empirical_in_place(samples: &mut [f64], delta: RiskLevel, o: Orientation) -> f64 {
    let n = samples.len();
    assert!(n > 0, "empirical CVaR of an empty sample");
    if o == Orientation::Reward {
        // Smallest values of x are the largest of -x.
        for x in samples.iter_mut() {
            *x = -*x;
        }
        let v = cvar_empirical_in_place(samples, delta, Orientation::Cost);
        return -v;
    }
    if delta.is_one() {
        return samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let mass = delta.tail() * n as f64;
    let full = (mass.floor() as usize).min(n);
    let frac = mass - full as f64;
    if full == n {
        return samples.iter().sum::<f64>() / n as f64;
    }
    // After selection, index `n - full - 1` holds the (full+1)-th largest
    // value and everything past it is at least as large.
    let pivot_idx = n - full - 1;
    let (_, pivot, upper) = samples.select_nth_unstable_by(pivot_idx, f64::total_cmp);
    let top: f64 = upper.iter().sum();
    (top + frac * *pivot) / mass
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> RiskLevel {
        RiskLevel::new(x).unwrap()
    }

    #[test]
    fn risk_level_bounds() {
        assert!(RiskLevel::new(-0.1).is_err());
        assert!(RiskLevel::new(1.1).is_err());
        assert!(RiskLevel::new(f64::NAN).is_err());
        assert!(RiskLevel::new(1.0).unwrap().is_one());
    }

    #[test]
    fn weighted_outcomes_validation() {
        assert!(WeightedOutcomes::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(WeightedOutcomes::new(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(WeightedOutcomes::new(vec![1.0, 2.0], vec![-0.5, 1.5]).is_err());
        assert!(WeightedOutcomes::new(vec![], vec![]).is_err());
    }

    #[test]
    fn discrete_example_three_outcomes() {
        let third = 1.0 / 3.0;
        let w = WeightedOutcomes::new(vec![3.0, 1.0, 1.0], vec![third, third, 1.0 - 2.0 * third])
            .unwrap();
        let v = cvar_discrete(&w, d(0.5), Orientation::Cost);
        assert!((v - 7.0 / 3.0).abs() < 1e-12);
        assert!((cvar_discrete(&w, d(0.0), Orientation::Cost) - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(cvar_discrete(&w, d(1.0), Orientation::Cost), 3.0);
        assert_eq!(cvar_discrete(&w, d(1.0), Orientation::Reward), 1.0);
    }

    #[test]
    fn esssup_ignores_zero_probability_outcomes() {
        let w = WeightedOutcomes::new(vec![10.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(cvar_discrete(&w, d(1.0), Orientation::Cost), 1.0);
    }

    #[test]
    fn greedy_ties_fill_lower_index_first() {
        let w = WeightedOutcomes::new(vec![1.0, 2.0, 1.0], vec![0.25, 0.25, 0.5]).unwrap();
        let q = greedy_fill(&w, 0.5, Orientation::Cost);
        assert_eq!(q, vec![0.25, 0.25, 0.0]);
    }

    #[test]
    fn inverse_cdf_examples() {
        let k = MonotoneGrid::constant(4.2).unwrap();
        for &delta in &[0.0, 0.3, 0.9, 1.0] {
            for o in [Orientation::Cost, Orientation::Reward] {
                assert!((cvar_from_inverse_cdf(&k, d(delta), o) - 4.2).abs() < 1e-12);
            }
        }
        let id = MonotoneGrid::linear(0.0, 1.0).unwrap();
        assert!((cvar_from_inverse_cdf(&id, d(0.5), Orientation::Cost) - 0.75).abs() < 1e-15);
        assert!((cvar_from_inverse_cdf(&id, d(0.5), Orientation::Reward) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn empirical_examples() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(cvar_empirical(&s, d(0.5), Orientation::Cost).unwrap(), 3.5);
        assert_eq!(cvar_empirical(&s, d(0.0), Orientation::Cost).unwrap(), 2.5);
        assert_eq!(cvar_empirical(&s, d(0.75), Orientation::Cost).unwrap(), 4.0);
        assert_eq!(cvar_empirical(&s, d(1.0), Orientation::Cost).unwrap(), 4.0);
        assert_eq!(cvar_empirical(&s, d(0.5), Orientation::Reward).unwrap(), 1.5);
        assert_eq!(cvar_empirical(&s, d(1.0), Orientation::Reward).unwrap(), 1.0);
        // mass 1.5: 4 + 0.5 * 3
        assert!((cvar_empirical(&s, d(0.625), Orientation::Cost).unwrap() - 5.5 / 1.5).abs() < 1e-15);
        assert_eq!(cvar_empirical(&[], d(0.5), Orientation::Cost), Err(Error::Empty));
    }
}

//! Ratio curves over adversary decisions and solver settings shared by the
//! problem modules.

use serde::Serialize;

use crate::error::{Error, Result};

/// The ratio `α_δ(s)` at each sampled adversary decision `s`, together with
/// its supremum over the sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcrReport {
    pub decisions: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    pub argmax_decision: f64,
}

impl DcrReport {
    /// Builds a report, locating the supremum. Among equal maxima the first
    /// decision wins.
    pub fn new(decisions: Vec<f64>, ratios: Vec<f64>) -> Result<Self> {
        if decisions.is_empty() {
            return Err(Error::Empty);
        }
        if decisions.len() != ratios.len() {
            return Err(Error::InvalidParameter(format!(
                "{} decisions but {} ratios",
                decisions.len(),
                ratios.len()
            )));
        }
        let mut best = 0;
        for (k, r) in ratios.iter().enumerate() {
            if *r > ratios[best] {
                best = k;
            }
        }
        Ok(Self {
            sup_ratio: ratios[best],
            argmax_decision: decisions[best],
            decisions,
            ratios,
        })
    }

    /// Largest deviation of the curve from `target`.
    pub fn max_deviation_from(&self, target: f64) -> f64 {
        self.ratios
            .iter()
            .map(|r| (r - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Numerical settings for every solver. Identical configs give bit-identical
/// results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Intervals in the tabulated strategy grid. Solvers for the continuous
    /// problems raise this to at least `200/(1-δ)`.
    pub grid_points: usize,
    /// Bracket width at which bisections stop.
    pub bisect_tol: f64,
    pub max_bisect_iters: usize,
    /// Uniform adversary decisions used to approximate the supremum.
    pub adversary_grid_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_points: 20_000,
            bisect_tol: 1e-6,
            max_bisect_iters: 100,
            adversary_grid_points: 2000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points == 0 || self.adversary_grid_points == 0 || self.max_bisect_iters == 0 {
            return Err(Error::InvalidParameter(
                "grid sizes and iteration caps must be positive".into(),
            ));
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bisection tolerance must be positive, got {}",
                self.bisect_tol
            )));
        }
        Ok(())
    }

    /// Grid size actually used at risk level `delta < 1`: the configured
    /// value, raised so that the delay `1-δ` spans at least 200 cells.
    pub fn effective_grid_points(&self, delta: f64) -> usize {
        let tail = 1.0 - delta;
        if tail <= 0.0 {
            return self.grid_points;
        }
        let needed = (200.0 / tail).ceil();
        if needed >= usize::MAX as f64 {
            usize::MAX
        } else {
            self.grid_points.max(needed as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_finds_first_maximum() {
        let r = DcrReport::new(vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.sup_ratio, 2.0);
        assert_eq!(r.argmax_decision, 0.2);
        assert_eq!(r.max_deviation_from(1.5), 0.5);
        assert!(DcrReport::new(vec![], vec![]).is_err());
        assert!(DcrReport::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn effective_grid_scales_with_delay() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.effective_grid_points(0.0), 20_000);
        assert_eq!(cfg.effective_grid_points(0.999), 200_000);
        assert!(cfg.validate().is_ok());
        let bad = SolverConfig {
            bisect_tol: 0.0,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }
}

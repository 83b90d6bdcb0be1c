//! Piecewise-linear nondecreasing functions on `[0, 1]`.
//!
//! Strategies for the continuous problems are stored as tabulated inverse
//! CDFs `φ = F_X⁻¹`. Between nodes the function is linearly interpolated, and
//! every integral or inversion below is exact for that interpolant.

use serde::Serialize;

use crate::error::{Error, Result};

const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneGrid {
    nodes: Vec<f64>,
    values: Vec<f64>,
    /// `cumulative[k] = ∫_0^{t_k} φ`.
    #[serde(skip)]
    cumulative: Vec<f64>,
    #[serde(skip)]
    uniform_step: Option<f64>,
}

impl MonotoneGrid {
    /// Builds a grid from explicit nodes and values.
    ///
    /// Nodes must be strictly increasing from 0 to 1 and values nondecreasing.
    pub fn new(mut nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
        }
        if nodes.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        let last = nodes.len() - 1;
        if nodes[0].abs() > ENDPOINT_TOL || (nodes[last] - 1.0).abs() > ENDPOINT_TOL {
            return Err(Error::InvalidGrid("nodes must span [0, 1]".into()));
        }
        nodes[0] = 0.0;
        nodes[last] = 1.0;
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("values must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidGrid("values must be nondecreasing".into()));
        }

        let step = 1.0 / last as f64;
        let uniform = nodes
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - k as f64 * step).abs() <= 1e-12);

        let mut cumulative = Vec::with_capacity(nodes.len());
        cumulative.push(0.0);
        for k in 0..last {
            let area = 0.5 * (values[k] + values[k + 1]) * (nodes[k + 1] - nodes[k]);
            cumulative.push(cumulative[k] + area);
        }

        Ok(Self {
            nodes,
            values,
            cumulative,
            uniform_step: uniform.then_some(step),
        })
    }

    /// Tabulates `f` on `intervals + 1` equally spaced nodes.
    pub fn from_fn_uniform(intervals: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidGrid("need at least one interval".into()));
        }
        let nodes: Vec<f64> = (0..=intervals)
            .map(|k| k as f64 / intervals as f64)
            .collect();
        let values = nodes.iter().map(|&t| f(t)).collect();
        Self::new(nodes, values)
    }

    /// Tabulates `f` on a uniform grid with the extra `breakpoints` merged in.
    pub fn from_fn_with_breakpoints(
        intervals: usize,
        breakpoints: &[f64],
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|k| k as f64 / intervals as f64)
            .chain(breakpoints.iter().copied().filter(|t| *t > 0.0 && *t < 1.0))
            .collect();
        nodes.sort_by(f64::total_cmp);
        let min_gap = 1e-9 / intervals as f64;
        nodes.dedup_by(|b, a| (*b - *a).abs() <= min_gap);
        let values = nodes.iter().map(|&t| f(t)).collect();
        Self::new(nodes, values)
    }

    /// Constant function.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![value, value])
    }

    /// Linear function from `a` at 0 to `b` at 1.
    pub fn linear(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![a, b])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first_value(&self) -> f64 {
        self.values[0]
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Index `k` of the segment `[t_k, t_{k+1}]` containing `t` (clamped).
    fn segment(&self, t: f64) -> usize {
        let last = self.nodes.len() - 1;
        if t <= 0.0 {
            return 0;
        }
        if t >= 1.0 {
            return last - 1;
        }
        let k = match self.uniform_step {
            Some(h) => ((t / h) as usize).min(last - 1),
            None => self.nodes.partition_point(|&x| x <= t).saturating_sub(1),
        };
        // Uniform lookup can be off by one from rounding.
        let mut k = k.min(last - 1);
        while k > 0 && self.nodes[k] > t {
            k -= 1;
        }
        while k + 1 < last && self.nodes[k + 1] <= t {
            k += 1;
        }
        k
    }

    /// Evaluates the interpolant at `t`, clamped to `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let k = self.segment(t);
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        let w = (t - t0) / (t1 - t0);
        v0 + w * (v1 - v0)
    }

    /// `∫_0^t φ` for `t` clamped to `[0, 1]`.
    pub fn primitive(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let k = self.segment(t);
        let t0 = self.nodes[k];
        let v0 = self.values[k];
        let vt = self.eval(t);
        self.cumulative[k] + 0.5 * (v0 + vt) * (t - t0)
    }

    /// `∫_a^b φ`; negative when `b < a`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.primitive(b) - self.primitive(a)
    }

    /// Generalized inverse `sup{t ∈ [0,1] : φ(t) <= v}`, i.e. the CDF `F_X(v)`
    /// of the random variable whose inverse CDF is this grid. Returns 0 when
    /// `v < φ(0)`.
    pub fn cdf(&self, v: f64) -> f64 {
        let last = self.values.len() - 1;
        if v < self.values[0] {
            return 0.0;
        }
        if v >= self.values[last] {
            return 1.0;
        }
        // Last node with value <= v; the next one is strictly larger.
        let k = self.values.partition_point(|&x| x <= v) - 1;
        let (v0, v1) = (self.values[k], self.values[k + 1]);
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        t0 + (v - v0) / (v1 - v0) * (t1 - t0)
    }

    /// Returns a copy with every value mapped through `f` (which must keep
    /// the values nondecreasing).
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.nodes.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(MonotoneGrid::new(vec![0.0, 0.5], vec![0.0, 1.0]).is_err());
        assert!(MonotoneGrid::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4]).is_err());
        assert!(MonotoneGrid::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(MonotoneGrid::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn midpoint_is_mean_of_neighbours() {
        let g = MonotoneGrid::new(vec![0.0, 0.3, 1.0], vec![0.0, 2.0, 5.0]).unwrap();
        assert!((g.eval(0.15) - 1.0).abs() < 1e-15);
        assert!((g.eval(0.65) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn integral_of_identity() {
        let g = MonotoneGrid::linear(0.0, 1.0).unwrap();
        assert!((g.integral(0.5, 1.0) - 0.375).abs() < 1e-15);
        assert!((g.primitive(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cdf_takes_right_end_of_flat_pieces() {
        let g = MonotoneGrid::new(vec![0.0, 0.4, 1.0], vec![2.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.cdf(1.9), 0.0);
        assert!((g.cdf(2.0) - 0.4).abs() < 1e-15);
        assert!((g.cdf(2.5) - 0.7).abs() < 1e-15);
        assert_eq!(g.cdf(3.0), 1.0);
    }

    #[test]
    fn uniform_lookup_matches_search() {
        let g = MonotoneGrid::from_fn_uniform(7, |t| t * t).unwrap();
        assert!(g.uniform_step.is_some());
        let mut h = g.clone();
        h.uniform_step = None;
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            assert_eq!(g.eval(t), h.eval(t));
            assert_eq!(g.primitive(t), h.primitive(t));
        }
        for k in 0..=7 {
            let t = k as f64 / 7.0;
            assert!((g.eval(t) - t * t).abs() < 1e-15);
        }
        let b = MonotoneGrid::from_fn_with_breakpoints(7, &[0.33], |t| t * t).unwrap();
        assert!(b.uniform_step.is_none());
        assert!((b.eval(0.33) - 0.1089).abs() < 1e-15);
    }
}

//! Small dense linear programs.
//!
//! Two-phase primal simplex on a full tableau with Bland's anti-cycling rule.
//! Intended for the few-dozen-variable programs the discrete ski rental
//! solver generates, not for anything large or sparse.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `minimize c·x subject to rows, x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds `coeffs · x (relation) rhs`.
    ///
    /// # Panics
    /// If `coeffs` has the wrong length.
    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars(), "row length mismatch");
        self.rows.push((coeffs, relation, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; the last column is
    /// the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_orig: usize,
    /// Columns at or past this index are artificial.
    first_artificial: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        // Flip rows so every right-hand side is nonnegative.
        let rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(c, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (c.clone(), *rel, *b)
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n + n_slack;
        let width = first_artificial + n_art + 1;

        let mut a = vec![vec![0.0; width]; m + 1];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (n, first_artificial);
        for (r, (coeffs, rel, b)) in rows.iter().enumerate() {
            a[r][..n].copy_from_slice(coeffs);
            a[r][width - 1] = *b;
            match rel {
                Relation::Le => {
                    a[r][slack] = 1.0;
                    basis[r] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    a[r][slack] = -1.0;
                    slack += 1;
                    a[r][art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
                Relation::Eq => {
                    a[r][art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
            }
        }
        Self {
            a,
            basis,
            n_orig: n,
            first_artificial,
        }
    }

    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn width(&self) -> usize {
        self.a[0].len()
    }

    /// Writes the reduced costs of `cost` (indexed by column) into the
    /// objective row.
    fn price(&mut self, cost: &[f64]) {
        let m = self.rows();
        let w = self.width();
        let mut obj = vec![0.0; w];
        obj[..cost.len()].copy_from_slice(cost);
        for r in 0..m {
            let cb = cost.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&self.a[r]) {
                    *o -= cb * v;
                }
            }
        }
        self.a[m] = obj;
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[row].clone();
        for (r, line) in self.a.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col];
            if f != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations over columns `< col_limit`.
    fn iterate(&mut self, col_limit: usize) -> Result<()> {
        let m = self.rows();
        let rhs = self.width() - 1;
        for _ in 0..MAX_PIVOTS {
            // Bland: first improving column, then lowest basic index on ties.
            let Some(col) = (0..col_limit).find(|&j| self.a[m][j] < -PIVOT_EPS) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..m {
                let v = self.a[r][col];
                if v > PIVOT_EPS {
                    let ratio = self.a[r][rhs] / v;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-14
                                || (ratio <= bratio + 1e-14 && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = best else {
                return Err(Error::Unbounded);
            };
            self.pivot(row, col);
        }
        Err(Error::NonConvergence {
            solver: "simplex",
            iterations: MAX_PIVOTS,
        })
    }

    fn solve(mut self, objective: &[f64]) -> Result<LpSolution> {
        let m = self.rows();
        let w = self.width();
        let rhs = w - 1;

        if self.first_artificial < rhs {
            let mut phase1 = vec![0.0; rhs];
            for v in phase1.iter_mut().skip(self.first_artificial) {
                *v = 1.0;
            }
            self.price(&phase1);
            self.iterate(rhs)?;
            if -self.a[m][rhs] > FEASIBILITY_EPS {
                return Err(Error::Infeasible);
            }
            // Drive remaining (zero-valued) artificials out of the basis;
            // rows with no usable pivot are redundant and dropped.
            let mut r = 0;
            while r < self.rows() {
                if self.basis[r] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| self.a[r][j].abs() > PIVOT_EPS) {
                        Some(j) => {
                            self.pivot(r, j);
                            r += 1;
                        }
                        None => {
                            self.a.remove(r);
                            self.basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }

        let m = self.rows();
        self.price(objective);
        self.iterate(self.first_artificial)?;

        let mut x = vec![0.0; self.n_orig];
        for r in 0..m {
            if self.basis[r] < self.n_orig {
                x[self.basis[r]] = self.a[r][rhs];
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective: value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.add_row(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.add_row(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.add_row(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min z st z >= x, z >= 1 - x, x + y = 1 -> z = 1/2.
        let mut lp = LinearProgram::new(vec![0.0, 0.0, 1.0]);
        lp.add_row(vec![1.0, 0.0, -1.0], Relation::Le, 0.0);
        lp.add_row(vec![-1.0, 0.0, -1.0], Relation::Le, -1.0);
        lp.add_row(vec![1.0, 1.0, 0.0], Relation::Eq, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![1.0], Relation::Ge, 2.0);
        lp.add_row(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), Err(Error::Infeasible));

        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.add_row(vec![1.0], Relation::Ge, 1.0);
        assert_eq!(lp.solve(), Err(Error::Unbounded));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add_row(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add_row(vec![2.0, 2.0], Relation::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }
}

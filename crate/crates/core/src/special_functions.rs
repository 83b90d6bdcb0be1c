//! Lambert W (real branches 0 and -1), the exponential integral Ei, and the
//! constant `c` solving `1 + 2c = e^c` on the upper branch.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// The branch point `-1/e` shared by both real branches of W.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Real branch of the Lambert W function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchId {
    /// `W_0`, defined on `[-1/e, inf)` with `W_0 >= -1`.
    Principal,
    /// `W_{-1}`, defined on `[-1/e, 0)` with `W_{-1} <= -1`.
    MinusOne,
}

const HALLEY_MAX_ITERS: usize = 64;

/// Solves `w e^w = x` on the requested branch by Halley iteration.
pub fn lambert_w(branch: BranchId, x: f64) -> Result<f64> {
    // Allow a few ulps of slack at the branch point so that `-1/e` computed
    // a different way still lands inside the domain.
    let slack = 4.0 * f64::EPSILON;
    if x.is_nan() || x < BRANCH_POINT - slack {
        return Err(Error::Domain {
            function: "lambert_w",
            value: x,
        });
    }
    if branch == BranchId::MinusOne && x >= 0.0 {
        return Err(Error::Domain {
            function: "lambert_w",
            value: x,
        });
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(branch, x);
    for _ in 0..HALLEY_MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(branch: BranchId, x: f64) -> f64 {
    // Series about the branch point in p = ±sqrt(2(ex + 1)).
    let near_branch = |p: f64| -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    match branch {
        BranchId::Principal => {
            if x < -0.25 {
                near_branch((2.0 * (E * x + 1.0)).max(0.0).sqrt())
            } else if x < 3.0 {
                x.ln_1p() * 0.8
            } else {
                let l1 = x.ln();
                let l2 = l1.ln();
                l1 - l2 + l2 / l1
            }
        }
        BranchId::MinusOne => {
            if x < -0.25 {
                near_branch(-(2.0 * (E * x + 1.0)).max(0.0).sqrt())
            } else {
                let l1 = (-x).ln();
                let l2 = (-l1).ln();
                l1 - l2 + l2 / l1
            }
        }
    }
}

/// Exponential integral `Ei(x) = -PV ∫_{-x}^∞ e^{-t}/t dt` for real `x != 0`.
///
/// Positive arguments use the convergent power series up to 40 and the
/// asymptotic expansion beyond. Negative arguments go through `-E1(-x)`,
/// using the series for `|x| <= 1` and a Lentz continued fraction otherwise;
/// the alternating series cancels catastrophically for large negative `x`.
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    if x == 0.0 || x.is_nan() {
        return Err(Error::Domain {
            function: "exp_integral_ei",
            value: x,
        });
    }
    if x < 0.0 {
        return Ok(-exp_integral_e1(-x));
    }
    if x <= 40.0 {
        Ok(ei_series(x))
    } else {
        Ok(ei_asymptotic(x))
    }
}

fn ei_series(x: f64) -> f64 {
    // Σ x^n / (n · n!) with term_n = term_{n-1} · x · (n-1) / n².
    let mut sum = 0.0;
    let mut power_over_fact = 1.0;
    for n in 1..500 {
        let nf = n as f64;
        power_over_fact *= x / nf;
        let term = power_over_fact / nf;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

fn ei_asymptotic(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..100 {
        let next = term * k as f64 / x;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum {
            break;
        }
    }
    x.exp() / x * sum
}

/// `E1(z) = ∫_z^∞ e^{-t}/t dt` for `z > 0`.
fn exp_integral_e1(z: f64) -> f64 {
    if z <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for n in 1..200 {
            let nf = n as f64;
            term *= -z / nf;
            let contrib = term / nf;
            sum += contrib;
            if contrib.abs() <= 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - z.ln() - sum
    } else {
        // Modified Lentz on the even continued fraction for e^z E1(z).
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() <= 1e-16 {
                break;
            }
        }
        h * (-z).exp()
    }
}

/// The constant `c = -(1 + 2 W_{-1}(-1/(2√e)))/2 ≈ 1.25643`, the nonzero root
/// of `1 + 2c - e^c = 0`.
pub fn constant_c() -> f64 {
    let arg = -1.0 / (2.0 * 0.5f64.exp());
    let w = lambert_w(BranchId::MinusOne, arg).expect("argument lies inside the W_{-1} domain");
    -(1.0 + 2.0 * w) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_w_trivial_points() {
        assert_eq!(lambert_w(BranchId::Principal, 0.0).unwrap(), 0.0);
        assert!((lambert_w(BranchId::Principal, E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w(BranchId::MinusOne, BRANCH_POINT).unwrap(), -1.0);
        assert_eq!(lambert_w(BranchId::Principal, BRANCH_POINT).unwrap(), -1.0);
    }

    #[test]
    fn lambert_w_domain_errors() {
        assert!(lambert_w(BranchId::Principal, -0.5).is_err());
        assert!(lambert_w(BranchId::MinusOne, 0.0).is_err());
        assert!(lambert_w(BranchId::MinusOne, 0.1).is_err());
        assert!(lambert_w(BranchId::MinusOne, -0.4).is_err());
    }

    #[test]
    fn lambert_w_branch_ranges() {
        for &x in &[-0.3678, -0.3, -0.1, -1e-3, -1e-10] {
            assert!(lambert_w(BranchId::Principal, x).unwrap() >= -1.0);
            assert!(lambert_w(BranchId::MinusOne, x).unwrap() <= -1.0);
        }
    }

    #[test]
    fn constant_c_value() {
        let c = constant_c();
        assert!((c - 1.25643).abs() < 5e-6, "c = {c}");
        assert!((1.0 + 2.0 * c - c.exp()).abs() <= 1e-12);
        assert!(c > 1.0);
    }

    #[test]
    fn ei_zero_is_a_domain_error() {
        assert!(exp_integral_ei(0.0).is_err());
    }

    #[test]
    fn ei_small_argument_matches_leading_terms() {
        let x: f64 = 1e-6;
        let approx = EULER_GAMMA + x.ln() + x;
        assert!((exp_integral_ei(x).unwrap() - approx).abs() < 1e-11);
    }

    #[test]
    fn ei_continuity_across_method_switches() {
        for &x in &[-1.0, 40.0] {
            let lo = exp_integral_ei(x * (1.0 - 1e-12)).unwrap();
            let hi = exp_integral_ei(x * (1.0 + 1e-12)).unwrap();
            assert!((lo - hi).abs() <= 1e-9 * lo.abs(), "x = {x}: {lo} vs {hi}");
        }
    }
}

//! Risk-sensitive competitive analysis for three classic online problems.
//!
//! The δ-CVaR-competitive ratio (DCR) of a randomized online algorithm is the
//! worst case, over adversary decisions, of the conditional value-at-risk of
//! its cost divided by the offline optimum (inverted for reward problems).
//! This crate computes optimal and suboptimal strategies, their DCRs and
//! upper/lower bounds for
//!
//! - continuous-time ski rental ([`ski_rental_continuous`]),
//! - discrete-time ski rental with integer buying cost ([`ski_rental_discrete`]),
//! - one-max search with prices in `[L, U]` ([`one_max_search`]),
//!
//! and cross-checks analytic results with a seeded Monte Carlo harness
//! ([`simulation`]).

pub mod dcr;
pub mod error;
pub mod grid;
pub mod lp;
pub mod one_max_search;
pub mod risk;
pub mod simulation;
pub mod ski_rental_continuous;
pub mod ski_rental_discrete;
pub mod special_functions;
pub mod sweep;

pub use dcr::{DcrReport, SolverConfig};
pub use error::{Error, Result};
pub use grid::MonotoneGrid;
pub use risk::{Orientation, RiskLevel, WeightedOutcomes};

//! δ-sweeps of optimal, suboptimal and bound curves, with CSV and SVG output.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::dcr::SolverConfig;
use crate::error::{Error, Result};
use crate::one_max_search::{
    oms_dcr, oms_lower_bound_root, oms_solve_alpha, oms_upper_bound_root, OmsProblem,
};
use crate::risk::RiskLevel;
use crate::ski_rental_continuous::{
    csr_lower_bound, csr_solve_optimal, csr_suboptimal_dcr, csr_suboptimal_strategy,
};
use crate::ski_rental_discrete::{
    dsr_analytic_threshold, dsr_dcr, dsr_embed_csr, dsr_phase_bounds, dsr_solve_optimal,
    expectation_optimal_strategy, expectation_ratio,
};

/// CSV header of a sweep.
pub const SWEEP_HEADER: &str = "delta,optimal,suboptimal,upper_bound,lower_bound";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Problem {
    Csr,
    Dsr { buy_cost: usize },
    Oms(OmsProblem),
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Csr => "csr",
            Problem::Dsr { .. } => "dsr",
            Problem::Oms(_) => "oms",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Series {
    Optimal,
    Suboptimal,
    UpperBound,
    LowerBound,
}

impl Series {
    pub const ALL: [Series; 4] = [
        Series::Optimal,
        Series::Suboptimal,
        Series::UpperBound,
        Series::LowerBound,
    ];

    pub fn column(&self) -> &'static str {
        match self {
            Series::Optimal => "optimal",
            Series::Suboptimal => "suboptimal",
            Series::UpperBound => "upper_bound",
            Series::LowerBound => "lower_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    problem: Problem,
    delta_values: Vec<f64>,
    outputs: BTreeSet<Series>,
}

impl SweepSpec {
    /// δ values must be nonempty, within `[0, 1]` and strictly ascending.
    pub fn new(problem: Problem, delta_values: Vec<f64>, outputs: BTreeSet<Series>) -> Result<Self> {
        if delta_values.is_empty() {
            return Err(Error::InvalidParameter("empty δ list".into()));
        }
        for &d in &delta_values {
            RiskLevel::new(d)?;
        }
        if delta_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "δ values must be strictly ascending".into(),
            ));
        }
        if outputs.is_empty() {
            return Err(Error::InvalidParameter("no output series requested".into()));
        }
        match problem {
            Problem::Dsr { buy_cost } if buy_cost < 2 => {
                return Err(Error::InvalidParameter(format!(
                    "buying cost must be at least 2, got {buy_cost}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            problem,
            delta_values,
            outputs,
        })
    }

    /// All four series.
    pub fn all_series(problem: Problem, delta_values: Vec<f64>) -> Result<Self> {
        Self::new(problem, delta_values, Series::ALL.into_iter().collect())
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn delta_values(&self) -> &[f64] {
        &self.delta_values
    }

    pub fn outputs(&self) -> &BTreeSet<Series> {
        &self.outputs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub optimal: Option<f64>,
    pub suboptimal: Option<f64>,
    pub upper_bound: Option<f64>,
    pub lower_bound: Option<f64>,
}

impl SweepRow {
    pub fn get(&self, s: Series) -> Option<f64> {
        match s {
            Series::Optimal => self.optimal,
            Series::Suboptimal => self.suboptimal,
            Series::UpperBound => self.upper_bound,
            Series::LowerBound => self.lower_bound,
        }
    }

    fn set(&mut self, s: Series, v: f64) {
        let slot = match s {
            Series::Optimal => &mut self.optimal,
            Series::Suboptimal => &mut self.suboptimal,
            Series::UpperBound => &mut self.upper_bound,
            Series::LowerBound => &mut self.lower_bound,
        };
        *slot = Some(v);
    }
}

/// Value of one series at one δ.
///
/// - csr: optimal from the delay equation; suboptimal and upper bound are the
///   closed-form strategy's ratio; lower bound is the analytic one.
/// - dsr: optimal from the numeric solver; suboptimal is the
///   expectation-optimal strategy evaluated at δ; the upper bound is the
///   better of day-`B` buying and the discretized closed-form continuous
///   strategy; the lower bound is exact below the analytic threshold, the
///   threshold value above it (the optimum is nondecreasing in δ), and
///   `2 - 1/B` in the deterministic regime.
/// - oms: optimal is the threshold family's ratio; suboptimal is the
///   risk-neutral (δ = 0) strategy evaluated at δ; the bounds are the roots.
pub fn series_value(problem: &Problem, series: Series, delta: RiskLevel, cfg: &SolverConfig) -> Result<f64> {
    match *problem {
        Problem::Csr => match series {
            Series::Optimal => Ok(csr_solve_optimal(delta, cfg)?.0),
            Series::Suboptimal | Series::UpperBound => Ok(csr_suboptimal_dcr(delta)),
            Series::LowerBound => Ok(csr_lower_bound(delta)),
        },
        Problem::Dsr { buy_cost } => {
            let deterministic = 2.0 - 1.0 / buy_cost as f64;
            match series {
                Series::Optimal => Ok(dsr_solve_optimal(buy_cost, delta, cfg)?.0),
                Series::Suboptimal => {
                    Ok(dsr_dcr(&expectation_optimal_strategy(buy_cost)?, delta)?.sup_ratio)
                }
                Series::UpperBound => {
                    let continuous = csr_suboptimal_strategy(delta, cfg.grid_points)?;
                    let embedded = dsr_dcr(&dsr_embed_csr(&continuous, buy_cost)?, delta)?;
                    Ok(embedded.sup_ratio.min(deterministic))
                }
                Series::LowerBound => {
                    let threshold = dsr_analytic_threshold(buy_cost)?;
                    let c = expectation_ratio(buy_cost)?;
                    let d = delta.value();
                    if d >= dsr_phase_bounds(buy_cost)?.deterministic_at_or_above {
                        Ok(deterministic)
                    } else {
                        let at = d.min(threshold);
                        Ok((c - at) / (1.0 - at))
                    }
                }
            }
        }
        Problem::Oms(p) => match series {
            Series::Optimal => Ok(oms_solve_alpha(&p, delta, cfg)?.0),
            Series::Suboptimal => {
                let (_, s) = oms_solve_alpha(&p, RiskLevel::ZERO, cfg)?;
                Ok(oms_dcr(&s, &p, delta, cfg)?.sup_ratio)
            }
            Series::UpperBound => oms_upper_bound_root(&p, delta),
            Series::LowerBound => oms_lower_bound_root(&p, delta),
        },
    }
}

/// Evaluates every requested series at every δ. Points run in parallel;
/// rows come back in input order.
pub fn run_sweep(spec: &SweepSpec, cfg: &SolverConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    spec.delta_values
        .par_iter()
        .map(|&d| {
            let delta = RiskLevel::new(d)?;
            let mut row = SweepRow {
                delta: d,
                optimal: None,
                suboptimal: None,
                upper_bound: None,
                lower_bound: None,
            };
            for &s in &spec.outputs {
                row.set(s, series_value(&spec.problem, s, delta, cfg)?);
            }
            Ok(row)
        })
        .collect()
}

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Nine significant digits, as written to every CSV.
pub fn format_csv_value(x: f64) -> String {
    format_significant(x, 9)
}

pub fn write_sweep_csv(rows: &[SweepRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        let cell = |v: Option<f64>| v.map(format_csv_value).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            format_csv_value(r.delta),
            cell(r.optimal),
            cell(r.suboptimal),
            cell(r.upper_bound),
            cell(r.lower_bound)
        )?;
    }
    Ok(())
}

/// Parses a sweep CSV written by [`write_sweep_csv`].
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(Error::InvalidParameter("missing or wrong CSV header".into()));
    }
    let number = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::InvalidParameter(format!("bad number {s:?}")))
    };
    let optional = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            number(s).map(Some)
        }
    };
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 5 {
                return Err(Error::InvalidParameter(format!(
                    "expected 5 cells, got {}",
                    cells.len()
                )));
            }
            Ok(SweepRow {
                delta: number(cells[0])?,
                optimal: optional(cells[1])?,
                suboptimal: optional(cells[2])?,
                upper_bound: optional(cells[3])?,
                lower_bound: optional(cells[4])?,
            })
        })
        .collect()
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const TICKS: usize = 5;

fn series_color(s: Series) -> &'static str {
    match s {
        Series::Optimal => "#1f77b4",
        Series::Suboptimal => "#ff7f0e",
        Series::UpperBound => "#2ca02c",
        Series::LowerBound => "#d62728",
    }
}

/// Line chart of every non-empty series against δ.
pub fn render_svg(rows: &[SweepRow], title: &str) -> String {
    let present: Vec<Series> = Series::ALL
        .into_iter()
        .filter(|s| rows.iter().any(|r| r.get(*s).is_some()))
        .collect();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        x0 = x0.min(r.delta);
        x1 = x1.max(r.delta);
        for s in &present {
            if let Some(v) = r.get(*s) {
                y0 = y0.min(v);
                y1 = y1.max(v);
            }
        }
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 0.5 };
    let (y0, y1) = (y0 - pad, y1 + pad);

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );
    let (bottom, right) = (MARGIN_TOP + plot_h, MARGIN_LEFT + plot_w);
    let _ = writeln!(
        svg,
        r#"<path d="M{MARGIN_LEFT},{MARGIN_TOP} L{MARGIN_LEFT},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
    );
    for k in 0..=TICKS {
        let f = k as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{tx:.2}" y1="{bottom}" x2="{tx:.2}" y2="{:.2}" stroke="black"/><text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 19.0,
            format_significant(xv, 3)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ty:.2}" x2="{MARGIN_LEFT}" y2="{ty:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            ty + 4.0,
            format_significant(yv, 4)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">δ</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">DCR</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );
    for (k, s) in present.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .filter_map(|r| r.get(*s).map(|v| format!("{:.2},{:.2}", px(r.delta), py(v))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            points.join(" "),
            series_color(*s)
        );
        let ly = MARGIN_TOP + 10.0 + 20.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            right + 12.0,
            right + 36.0,
            series_color(*s),
            right + 42.0,
            ly + 4.0,
            s.column()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

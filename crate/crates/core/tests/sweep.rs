use std::collections::BTreeSet;

use proptest::prelude::*;

use riskcr_core::one_max_search::OmsProblem;
use riskcr_core::sweep::{
    format_csv_value, format_significant, parse_sweep_csv, render_svg, run_sweep, write_sweep_csv,
    Problem, Series, SweepRow, SweepSpec, SWEEP_HEADER,
};
use riskcr_core::SolverConfig;

fn csv(rows: &[SweepRow]) -> String {
    let mut out = Vec::new();
    write_sweep_csv(rows, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn spec_validation() {
    let all = || Series::ALL.into_iter().collect::<BTreeSet<_>>();
    assert!(SweepSpec::new(Problem::Csr, vec![], all()).is_err());
    assert!(SweepSpec::new(Problem::Csr, vec![0.5, 0.2], all()).is_err());
    assert!(SweepSpec::new(Problem::Csr, vec![0.2, 0.2], all()).is_err());
    assert!(SweepSpec::new(Problem::Csr, vec![0.0, 1.2], all()).is_err());
    assert!(SweepSpec::new(Problem::Csr, vec![0.0], BTreeSet::new()).is_err());
    assert!(SweepSpec::new(Problem::Dsr { buy_cost: 1 }, vec![0.0], all()).is_err());
    assert!(SweepSpec::new(Problem::Csr, vec![0.0, 1.0], all()).is_ok());
}

#[test]
fn rows_follow_input_order() {
    let deltas: Vec<f64> = (0..=12).map(|k| k as f64 / 12.0).collect();
    let spec = SweepSpec::all_series(Problem::Dsr { buy_cost: 5 }, deltas.clone()).unwrap();
    let rows = run_sweep(&spec, &SolverConfig::default()).unwrap();
    assert_eq!(rows.iter().map(|r| r.delta).collect::<Vec<_>>(), deltas);
    for r in &rows {
        let (lo, opt, hi) = (r.lower_bound.unwrap(), r.optimal.unwrap(), r.upper_bound.unwrap());
        assert!(lo <= opt + 1e-9 && opt <= hi + 1e-9, "δ={}: {lo} {opt} {hi}", r.delta);
        assert!(opt <= r.suboptimal.unwrap() + 1e-9);
    }
}

#[test]
fn oms_bounds_meet_above_half() {
    let p = OmsProblem::normalized(100.0).unwrap();
    let spec = SweepSpec::new(
        Problem::Oms(p),
        vec![0.5, 0.6, 0.8, 1.0],
        [Series::UpperBound, Series::LowerBound].into_iter().collect(),
    )
    .unwrap();
    for r in run_sweep(&spec, &SolverConfig::default()).unwrap() {
        assert_eq!(r.lower_bound, Some(10.0));
        assert_eq!(r.upper_bound, Some(10.0));
        assert_eq!(r.optimal, None);
    }
}

#[test]
fn csv_layout() {
    let rows = vec![SweepRow {
        delta: 0.25,
        optimal: Some(1.0 / 3.0),
        suboptimal: None,
        upper_bound: Some(2.0),
        lower_bound: Some(1e-7),
    }];
    let text = csv(&rows);
    assert_eq!(text, format!("{SWEEP_HEADER}\n0.25,0.333333333,,2,1e-7\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn significant_digit_formatting() {
    assert_eq!(format_significant(1.58197670686933, 9), "1.58197671");
    assert_eq!(format_significant(-2.5, 3), "-2.5");
    assert_eq!(format_significant(123456789012.0, 9), "1.23456789e11");
    assert_eq!(format_significant(0.0001234, 9), "0.0001234");
    assert_eq!(format_significant(0.0, 9), "0");
    assert_eq!(format_csv_value(10.0), "10");
}

#[test]
fn svg_has_axes_and_legend() {
    let rows: Vec<SweepRow> = (0..5)
        .map(|k| SweepRow {
            delta: k as f64 / 4.0,
            optimal: Some(1.5 + k as f64 / 10.0),
            suboptimal: None,
            upper_bound: Some(2.0),
            lower_bound: None,
        })
        .collect();
    let svg = render_svg(&rows, "a < b & c");
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains(">δ<") && svg.contains(">DCR<"));
    assert!(svg.contains("a &lt; b &amp; c"));
    assert!(svg.contains("optimal") && svg.contains("upper_bound"));
    assert!(!svg.contains("lower_bound"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

fn cell() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(prop_oneof![-1e6..1e6f64, 1e-9..1e-3f64, 1e3..1e12f64])
}

proptest! {
    #[test]
    fn csv_round_trip(rows in prop::collection::vec((0.0..=1.0f64, cell(), cell(), cell(), cell()), 1..20)) {
        let rows: Vec<SweepRow> = rows
            .into_iter()
            .map(|(delta, optimal, suboptimal, upper_bound, lower_bound)| SweepRow {
                delta, optimal, suboptimal, upper_bound, lower_bound,
            })
            .collect();
        let text = csv(&rows);
        let parsed = parse_sweep_csv(&text).unwrap();
        prop_assert_eq!(parsed.len(), rows.len());
        for (a, b) in rows.iter().zip(&parsed) {
            prop_assert_eq!(format_csv_value(a.delta), format_csv_value(b.delta));
            for s in Series::ALL {
                prop_assert_eq!(a.get(s).map(format_csv_value), b.get(s).map(format_csv_value));
                if let (Some(x), Some(y)) = (a.get(s), b.get(s)) {
                    prop_assert!((x - y).abs() <= 5e-9 * x.abs());
                }
            }
        }
        prop_assert_eq!(csv(&parsed), text);
    }
}

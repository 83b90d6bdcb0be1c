use riskcr_core::one_max_search::{oms_solve_alpha, OmsProblem};
use riskcr_core::simulation::{simulate_csr, simulate_dsr, simulate_oms, SimConfig, SimReport};
use riskcr_core::ski_rental_continuous::csr_solve_optimal;
use riskcr_core::ski_rental_discrete::dsr_solve_optimal;
use riskcr_core::{RiskLevel, SolverConfig};

fn d(x: f64) -> RiskLevel {
    RiskLevel::new(x).unwrap()
}

/// Runs all three problems on their solved strategies.
fn run_all(samples: usize, seed: u64) -> [SimReport; 3] {
    let cfg = SolverConfig::default();
    let sim = SimConfig::new(samples, seed, 20).unwrap();
    let (_, csr) = csr_solve_optimal(d(0.5), &cfg).unwrap();
    let (_, dsr) = dsr_solve_optimal(4, d(0.5), &cfg).unwrap();
    let p = OmsProblem::normalized(100.0).unwrap();
    let (_, oms) = oms_solve_alpha(&p, d(0.3), &cfg).unwrap();
    [
        simulate_csr(&csr, d(0.5), &sim).unwrap(),
        simulate_dsr(&dsr, d(0.5), &sim).unwrap(),
        simulate_oms(&oms, &p, d(0.3), &sim).unwrap(),
    ]
}

#[test]
fn identical_config_gives_identical_report() {
    assert_eq!(run_all(20_000, 9), run_all(20_000, 9));
    assert_ne!(run_all(20_000, 9)[0], run_all(20_000, 10)[0]);
}

/// Summed over seeds 1..=3, the largest gap at 10⁶ samples is no larger than
/// at 5·10⁵, and every 10⁶-sample report lies within 3 standard errors.
#[test]
fn doubling_samples_shrinks_gap() {
    let mut half = [0.0; 3];
    let mut full = [0.0; 3];
    for seed in 1..=3 {
        for (k, r) in run_all(500_000, seed).iter().enumerate() {
            half[k] += r.max_abs_gap;
        }
        for (k, r) in run_all(1_000_000, seed).iter().enumerate() {
            full[k] += r.max_abs_gap;
            assert!(r.within(3.0), "problem {k} seed {seed}: gap {} stderr {}", r.max_abs_gap, r.stderr_estimate);
        }
    }
    for k in 0..3 {
        assert!(full[k] <= half[k], "problem {k}: {} then {}", half[k], full[k]);
    }
}

#[test]
fn empirical_csr_ratio_is_flat() {
    let [csr, _, _] = run_all(1_000_000, 4);
    let n = csr.empirical_ratios.len() as f64;
    let mean = csr.empirical_ratios.iter().sum::<f64>() / n;
    let sd = (csr.empirical_ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(sd <= 3.0 * csr.stderr_estimate, "sd {sd}, stderr {}", csr.stderr_estimate);
}

#[test]
fn report_layout() {
    let [csr, dsr, oms] = run_all(10_000, 1);
    assert_eq!(csr.decisions.len(), 20);
    assert_eq!(*csr.decisions.last().unwrap(), 1.0);
    assert_eq!(dsr.decisions, vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(*oms.decisions.last().unwrap(), 100.0);
    for r in [&csr, &dsr, &oms] {
        let gaps = r.gaps();
        let max = gaps.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        assert_eq!(max, r.max_abs_gap);
        assert!(r.stderr_estimate > 0.0);
    }
}

#[test]
fn mismatched_problem_is_rejected() {
    let cfg = SolverConfig::default();
    let p = OmsProblem::normalized(100.0).unwrap();
    let (_, s) = oms_solve_alpha(&p, d(0.3), &cfg).unwrap();
    let other = OmsProblem::normalized(50.0).unwrap();
    let sim = SimConfig::new(1000, 1, 5).unwrap();
    assert!(simulate_oms(&s, &other, d(0.3), &sim).is_err());
}

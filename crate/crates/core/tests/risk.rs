use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskcr_core::risk::{cvar_discrete, cvar_empirical, cvar_from_inverse_cdf};
use riskcr_core::{MonotoneGrid, Orientation, RiskLevel, WeightedOutcomes};

fn d(x: f64) -> RiskLevel {
    RiskLevel::new(x).unwrap()
}

/// Strategy for a distribution on up to `max` outcomes in `[-5, 5]` with
/// probabilities on the 1/1000 lattice.
fn lattice_distribution(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u32>)> {
    (1..=max).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0..5.0f64, n),
            prop::collection::vec(0..=1000u32, n - 1),
        )
            .prop_map(|(x, mut cuts)| {
                cuts.extend([0, 1000]);
                cuts.sort_unstable();
                let p = cuts.windows(2).map(|w| w[1] - w[0]).collect();
                (x, p)
            })
    })
}

fn weighted(x: &[f64], p: &[u32]) -> WeightedOutcomes {
    WeightedOutcomes::new(x.to_vec(), p.iter().map(|&v| v as f64 / 1000.0).collect()).unwrap()
}

/// Exhaustive search over `q` on the 1/1000 lattice with `0 <= q <= p` and
/// `Σq = budget`; `sign = -1` minimizes.
fn brute_force(x: &[f64], p: &[u32], budget: u32, sign: f64) -> f64 {
    fn go(x: &[f64], p: &[u32], left: u32, acc: f64, sign: f64, best: &mut f64) {
        if p.len() == 1 {
            if left <= p[0] {
                *best = best.max(sign * (acc + left as f64 * x[0]));
            }
            return;
        }
        for q in 0..=p[0].min(left) {
            go(&x[1..], &p[1..], left - q, acc + q as f64 * x[0], sign, best);
        }
    }
    let mut best = f64::NEG_INFINITY;
    go(x, p, budget, 0.0, sign, &mut best);
    sign * best / budget as f64
}

/// Step inverse CDF of a discrete distribution as a grid, with each jump
/// resolved over a 1e-10 wide ramp.
fn step_grid(w: &WeightedOutcomes) -> MonotoneGrid {
    let mut pairs: Vec<(f64, f64)> = w
        .outcomes()
        .iter()
        .copied()
        .zip(w.probs().iter().copied())
        .filter(|(_, p)| *p > 0.0)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes = vec![0.0];
    let mut values = vec![pairs[0].0];
    let mut acc = 0.0;
    for k in 0..pairs.len() - 1 {
        acc += pairs[k].1;
        nodes.push(acc - 1e-10);
        values.push(pairs[k].0);
        nodes.push(acc);
        values.push(pairs[k + 1].0);
    }
    nodes.push(1.0);
    values.push(pairs.last().unwrap().0);
    MonotoneGrid::new(nodes, values).unwrap()
}

#[test]
fn examples() {
    let w = WeightedOutcomes::new(vec![1.0, 2.0, 3.0], vec![0.2, 0.3, 0.5]).unwrap();
    assert!((cvar_discrete(&w, d(0.0), Orientation::Cost) - 2.3).abs() < 1e-15);
    assert!((cvar_discrete(&w, d(0.6), Orientation::Cost) - 3.0).abs() < 1e-15);
    assert!((cvar_discrete(&w, d(0.3), Orientation::Cost) - (0.5 * 3.0 + 0.2 * 2.0) / 0.7).abs() < 1e-15);
    assert_eq!(cvar_discrete(&w, d(1.0), Orientation::Cost), 3.0);
    assert_eq!(cvar_discrete(&w, d(1.0), Orientation::Reward), 1.0);
    assert!((cvar_discrete(&w, d(0.5), Orientation::Reward) - (0.2 + 0.3 * 2.0) / 0.5).abs() < 1e-15);
}

#[test]
fn monotone_in_delta() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w = WeightedOutcomes::new(x, raw.iter().map(|v| v / total).collect()).unwrap();
        let deltas: Vec<f64> = (0..10).map(|k| k as f64 / 9.0).collect();
        for pair in deltas.windows(2) {
            let (a, b) = (d(pair[0]), d(pair[1]));
            assert!(cvar_discrete(&w, a, Orientation::Cost) <= cvar_discrete(&w, b, Orientation::Cost) + 1e-12);
            assert!(cvar_discrete(&w, a, Orientation::Reward) + 1e-12 >= cvar_discrete(&w, b, Orientation::Reward));
        }
    }
}

#[test]
fn empirical_converges_to_discrete() {
    let w = WeightedOutcomes::new(vec![0.0, 1.0, 4.0, 10.0], vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let cumulative = [0.4, 0.7, 0.9, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let batches = 20;
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            w.outcomes()[cumulative.iter().position(|&c| u < c).unwrap_or(3)]
        })
        .collect();
    for (delta, o) in [(0.0, Orientation::Cost), (0.5, Orientation::Cost), (0.85, Orientation::Cost), (0.3, Orientation::Reward)] {
        let exact = cvar_discrete(&w, d(delta), o);
        let full = cvar_empirical(&samples, d(delta), o).unwrap();
        let parts: Vec<f64> = samples
            .chunks(n / batches)
            .map(|c| cvar_empirical(c, d(delta), o).unwrap())
            .collect();
        let mean = parts.iter().sum::<f64>() / batches as f64;
        let var = parts.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let stderr = (var / batches as f64).sqrt();
        assert!((full - exact).abs() <= 3.0 * stderr + 1e-12, "δ={delta}: {full} vs {exact} ± {stderr}");
    }
}

#[test]
fn empirical_fractional_boundary() {
    // Ten samples, tail of 2.5 samples: 9 + 8 + 0.5·7.
    let s: Vec<f64> = (0..10).map(|k| k as f64).collect();
    let got = cvar_empirical(&s, d(0.75), Orientation::Cost).unwrap();
    assert!((got - (9.0 + 8.0 + 0.5 * 7.0) / 2.5).abs() < 1e-12);
    let got = cvar_empirical(&s, d(0.75), Orientation::Reward).unwrap();
    assert!((got - (0.0 + 1.0 + 0.5 * 2.0) / 2.5).abs() < 1e-12);
    assert!(cvar_empirical(&[], d(0.5), Orientation::Cost).is_err());
}

#[test]
fn inverse_cdf_examples() {
    let uniform = MonotoneGrid::linear(0.0, 1.0).unwrap();
    assert!((cvar_from_inverse_cdf(&uniform, d(0.0), Orientation::Cost) - 0.5).abs() < 1e-15);
    assert!((cvar_from_inverse_cdf(&uniform, d(0.5), Orientation::Cost) - 0.75).abs() < 1e-15);
    assert!((cvar_from_inverse_cdf(&uniform, d(0.5), Orientation::Reward) - 0.25).abs() < 1e-15);
    assert_eq!(cvar_from_inverse_cdf(&uniform, d(1.0), Orientation::Cost), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_matches_brute_force((x, p) in lattice_distribution(4), k in 0..1000u32) {
        let w = weighted(&x, &p);
        let delta = d(k as f64 / 1000.0);
        let budget = 1000 - k;
        let cost = cvar_discrete(&w, delta, Orientation::Cost);
        let reward = cvar_discrete(&w, delta, Orientation::Reward);
        prop_assert!((cost - brute_force(&x, &p, budget, 1.0)).abs() <= 1e-3);
        prop_assert!((reward - brute_force(&x, &p, budget, -1.0)).abs() <= 1e-3);
    }

    #[test]
    fn discrete_matches_inverse_cdf((x, p) in lattice_distribution(6), delta in 0.0..0.999f64) {
        let w = weighted(&x, &p);
        let grid = step_grid(&w);
        for o in [Orientation::Cost, Orientation::Reward] {
            let a = cvar_discrete(&w, d(delta), o);
            let b = cvar_from_inverse_cdf(&grid, d(delta), o);
            prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn translation_and_scaling((x, p) in lattice_distribution(6), delta in 0.0..=1.0f64, a in 0.01..10.0f64, b in -10.0..10.0f64) {
        let w = weighted(&x, &p);
        let moved = WeightedOutcomes::new(x.iter().map(|v| a * v + b).collect(), w.probs().to_vec()).unwrap();
        for o in [Orientation::Cost, Orientation::Reward] {
            let lhs = cvar_discrete(&moved, d(delta), o);
            let rhs = a * cvar_discrete(&w, d(delta), o) + b;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn between_mean_and_extremes((x, p) in lattice_distribution(6), delta in 0.0..=1.0f64) {
        let w = weighted(&x, &p);
        let mean = w.mean();
        let cost = cvar_discrete(&w, d(delta), Orientation::Cost);
        let reward = cvar_discrete(&w, d(delta), Orientation::Reward);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(mean - 1e-9 <= cost && cost <= hi + 1e-9);
        prop_assert!(lo - 1e-9 <= reward && reward <= mean + 1e-9);
    }
}

"""Smoke test for the riskcr extension module."""

import math

import riskcr


def main():
    alpha, s = riskcr.csr_solve(0.0)
    assert abs(alpha - math.e / (math.e - 1)) < 1e-5, alpha
    assert abs(riskcr.csr_dcr(s, 0.0).sup_ratio - alpha) < 1e-5
    lower, sub = riskcr.csr_bounds(0.75)
    assert lower == 1.875 and lower <= sub

    alpha, s = riskcr.dsr_solve(4, 0.0)
    assert abs(alpha - 256 / 175) < 1e-9, alpha
    assert len(s.probs) == 4 and abs(sum(s.probs) - 1) < 1e-12
    assert abs(riskcr.dsr_dcr(riskcr.DiscreteStrategy.deterministic(4), 0.5).sup_ratio - 1.75) < 1e-12

    alpha, s = riskcr.oms_solve(100.0, 0.6)
    assert abs(alpha - 10) < 1e-6, alpha
    lo, hi = riskcr.oms_bounds(100.0, 0.3)
    assert 1 <= lo <= hi <= 10

    assert riskcr.cvar([1.0, 2.0], [0.5, 0.5], 0.5) == 2.0
    assert riskcr.cvar([1.0, 2.0], [0.5, 0.5], 0.5, reward=True) == 1.0

    _, s = riskcr.csr_solve(0.5)
    report = riskcr.simulate_csr(s, 0.5, samples=200_000, seed=3)
    assert report.within(3.0), report

    csv = riskcr.sweep_csv("dsr", [0.0, 0.5, 1.0], buy_cost=4)
    assert csv.splitlines()[0] == "delta,optimal,suboptimal,upper_bound,lower_bound"

    try:
        riskcr.csr_solve(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
    print("smoke test passed")


if __name__ == "__main__":
    main()

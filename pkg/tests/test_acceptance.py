"""Acceptance criteria at full size. Each test prints one PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -s``.
"""

import pytest

from aoivnet import validation

CRITERIA = [
    validation.tandem_aoi_vs_des,
    validation.mm1_degeneration,
    validation.symmetry_and_continuity,
    validation.coverage_vs_monte_carlo,
    validation.taylor_gap,
    validation.trend_checks,
    validation.normalization_suite,
    validation.poisson_departures,
]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion):
    res = criterion()
    print()
    print(res.line())
    if not res.passed:
        print(f"    detail: {res.detail}")
    assert res.passed, res.line()

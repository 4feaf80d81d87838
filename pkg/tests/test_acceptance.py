"""Acceptance criteria, one test per criterion.

Each test prints one PASS/FAIL line with the measured value, tolerance,
runtime and seed (visible with ``pytest -s`` or ``-rA``).
"""

import time

import pytest

from ppchannel import validation


@pytest.mark.parametrize("check", validation.ACCEPTANCE, ids=lambda c: c.name)
def test_acceptance_criterion(check):
    res = check.run()
    print(f"\n{check.name:<4} {validation.format_row(res)}")
    assert res.passed, res.measured


def test_A13_full_tier_property_suites():
    t0 = time.perf_counter()
    results = validation.run_tier("full")
    elapsed = time.perf_counter() - t0
    failed = [r.name for r in results if not r.passed]
    ok = not failed and elapsed < 600.0
    print(f"\nA13  {'PASS' if ok else 'FAIL'}  full tier {len(results) - len(failed)}/{len(results)} "
          f"checks in {elapsed:.1f}s  tol=all pass, 600 s")
    assert not failed, failed
    assert elapsed < 600.0


def test_fast_tier_within_budget():
    t0 = time.perf_counter()
    results = validation.run_tier("fast")
    assert all(r.passed for r in results)
    assert time.perf_counter() - t0 < 60.0


def test_full_tier_covers_every_criterion():
    names = [c.name for c in validation.checks_for("full")]
    assert [c.name for c in validation.ACCEPTANCE] == [f"A{i}" for i in range(1, 13)]
    assert set(names) >= {c.name for c in validation.ACCEPTANCE}


def test_stochastic_checks_report_seeds():
    for check in validation.checks_for("full"):
        if check.name in {"A4", "A5", "A6", "A7"} or check.name.startswith("montecarlo."):
            if check.name != "montecarlo.ci_coverage":
                assert check.seed is not None, check.name

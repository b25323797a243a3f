"""Acceptance battery, one test per numbered criterion.

This is the same battery that backs ``heatlab verify``; running it through
pytest gives one pass/fail line per criterion and pins a wall-clock budget
for each.  Budgets are deliberately loose (slow CI boxes) -- the point is to
catch order-of-magnitude regressions, not to benchmark.
"""

import pytest

from heatlab.acceptance import Context, run_criterion

# wall-clock ceilings in seconds; criterion 17 re-runs the quick battery
# twice, so it gets the sum of everything else as its ceiling
BUDGETS = {
    1: 5.0,
    2: 30.0,
    3: 60.0,
    4: 30.0,
    5: 30.0,
    6: 120.0,
    7: 120.0,
    8: 120.0,
    9: 60.0,
    10: 120.0,
    11: 30.0,
    12: 60.0,
    13: 1.0,
    14: 120.0,
    15: 30.0,
    16: 1.0,
    17: 900.0,
}


@pytest.fixture(scope="module")
def ctx():
    # full-size Monte Carlo (1e6 samples); profile cache shared across tests
    return Context(seed=0, quick=False)


def _run(cid, ctx):
    res = run_criterion(cid, ctx)
    status = "pass" if res.passed else "FAIL"
    print(f"[{status}] criterion {cid:02d} ({res.seconds:6.2f}s): {res.name} -- {res.detail}")
    assert res.passed, f"criterion {cid}: {res.detail}"
    assert res.seconds < BUDGETS[cid], (
        f"criterion {cid} took {res.seconds:.1f}s (budget {BUDGETS[cid]:.0f}s)"
    )
    return res


def test_criterion_01_general_alpha_kernel_matches_poisson_closed_form(ctx):
    _run(1, ctx)


def test_criterion_02_first_moment_identity(ctx):
    _run(2, ctx)


def test_criterion_03_covariance_invariant_suite(ctx):
    _run(3, ctx)


def test_criterion_04_lens_formula_and_mc_cross_check(ctx):
    _run(4, ctx)


def test_criterion_05_directional_perimeter_closed_forms(ctx):
    _run(5, ctx)


def test_criterion_06_stable_sweep_limit_alpha_1_5(ctx):
    _run(6, ctx)


def test_criterion_07_logarithmic_regime_sweep_and_envelope(ctx):
    _run(7, ctx)


def test_criterion_08_low_alpha_sweep_vs_alpha_perimeter(ctx):
    _run(8, ctx)


def test_criterion_09_gaussian_sweep_constant(ctx):
    _run(9, ctx)


def test_criterion_10_moment_bound_at_every_t(ctx):
    _run(10, ctx)


def test_criterion_11_poly_lambda_and_pointwise_bound(ctx):
    _run(11, ctx)


def test_criterion_12_poisson_ball_decomposition_identity(ctx):
    _run(12, ctx)


def test_criterion_13_constant_identities(ctx):
    _run(13, ctx)


def test_criterion_14_mc_heat_content_cross_check(ctx):
    _run(14, ctx)


def test_criterion_15_alpha_perimeter_scaling(ctx):
    _run(15, ctx)


def test_criterion_16_typed_regime_errors(ctx):
    _run(16, ctx)


def test_criterion_17_battery_determinism(ctx):
    _run(17, ctx)

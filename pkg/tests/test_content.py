"""Heat content engine: deficit route, regimes, sweeps, bounds, decomposition."""

import math

import numpy as np
import pytest

from heatlab.content import (
    DEFAULT_T_GRID,
    REGIME_ALPHA_EQ_1,
    REGIME_ALPHA_GT_1,
    REGIME_ALPHA_LT_1,
    REGIME_GAUSSIAN,
    REGIME_POLY,
    TAG_LIMIT,
    TAG_UPPER_BOUND,
    asymptotic_sweep,
    ball_poisson_decomposition,
    bound_check_part_i,
    bound_check_part_ii,
    constant_tag,
    deficit,
    heat_content,
    poly_lambda,
    regime_of,
    regime_scaling,
    scaled_deficit,
    stable_limit_constant,
    theoretical_constant,
)
from heatlab.errors import DivergentMomentError, RegimeError
from heatlab.geometry import Ball, Box, perimeter, radial_profile, volume
from heatlab.kernel import KernelSpec, l1_norm_closed_form, poisson_constant

BALL = Ball(1.0, 2)
BALL_PROFILE = radial_profile(BALL)


def poly_poisson_spec(d=2):
    # the Cauchy kernel written as a poly-family member: same exponents,
    # same constants, so every poisson result must reproduce exactly
    return KernelSpec.poly_family(
        d, kappa=poisson_constant(d), n=2.0, m=(d + 1) / 2.0, beta=-d, gamma=1.0
    )


# -- regimes --------------------------------------------------------------------


def test_regime_classification():
    assert regime_of(KernelSpec.stable(1.5, 2)) == REGIME_ALPHA_GT_1
    assert regime_of(KernelSpec.poisson(2)) == REGIME_ALPHA_EQ_1
    assert regime_of(KernelSpec.stable(1.0, 2)) == REGIME_ALPHA_EQ_1
    assert regime_of(KernelSpec.stable(0.5, 2)) == REGIME_ALPHA_LT_1
    assert regime_of(KernelSpec.gaussian(2)) == REGIME_GAUSSIAN
    assert regime_of(poly_poisson_spec()) == REGIME_POLY


def test_regime_scaling_values():
    t = 1e-4
    assert regime_scaling(KernelSpec.stable(1.5, 2), t) == pytest.approx(t ** (1 / 1.5))
    assert regime_scaling(KernelSpec.gaussian(2), t) == pytest.approx(math.sqrt(t))
    assert regime_scaling(KernelSpec.stable(0.5, 2), t) == pytest.approx(t)
    assert regime_scaling(KernelSpec.poisson(2), t) == pytest.approx(t * math.log(1 / t))
    assert regime_scaling(poly_poisson_spec(), t) == pytest.approx(t * math.log(1 / t))


def test_log_regime_scaling_needs_small_t():
    for spec in (KernelSpec.poisson(2), poly_poisson_spec()):
        with pytest.raises(RegimeError):
            regime_scaling(spec, 1.0)
    # power regimes have no such restriction
    assert regime_scaling(KernelSpec.gaussian(2), 2.0) == pytest.approx(math.sqrt(2.0))


# -- heat content and deficit ------------------------------------------------------


def test_heat_content_invariants():
    for spec in (KernelSpec.gaussian(2), KernelSpec.poisson(2), KernelSpec.stable(1.5, 2)):
        sc = spec.scaling()
        for t in (1e-1, 1e-3):
            res = heat_content(spec, BALL_PROFILE, t)
            cap = t ** (sc.beta + 2 * sc.gamma) * l1_norm_closed_form(spec) * volume(BALL)
            assert 0.0 <= res.H <= cap + res.quad_error
            assert res.deficit >= 0.0
            assert res.H + res.deficit == pytest.approx(cap, rel=1e-12)
            assert res.quad_error < 1e-6 * max(res.deficit, 1e-30)


def test_deficit_decreases_with_t():
    spec = KernelSpec.stable(1.5, 2)
    assert deficit(spec, BALL_PROFILE, 1e-5) < deficit(spec, BALL_PROFILE, 1e-2)


def test_positive_time_required():
    with pytest.raises(ValueError):
        heat_content(KernelSpec.gaussian(2), BALL_PROFILE, 0.0)
    with pytest.raises(ValueError):
        heat_content(KernelSpec.gaussian(2), BALL_PROFILE, -1.0)


def test_profile_dimension_must_match_spec():
    prof3 = radial_profile(Ball(1.0, 3))
    with pytest.raises(ValueError):
        heat_content(KernelSpec.gaussian(2), prof3, 0.1)


def test_gaussian_ball_small_t_deficit():
    # leading term Per(B)/sqrt(pi) * sqrt(t) = 2 sqrt(pi t)
    t = 1e-8
    d = deficit(KernelSpec.gaussian(2), BALL_PROFILE, t)
    assert d == pytest.approx(2.0 * math.sqrt(math.pi * t), rel=1e-3)


def test_poly_instance_reproduces_poisson():
    spec_poisson = KernelSpec.poisson(2)
    spec_poly = poly_poisson_spec()
    for t in (0.5, 0.05):
        a = heat_content(spec_poisson, BALL_PROFILE, t)
        b = heat_content(spec_poly, BALL_PROFILE, t)
        assert b.H == pytest.approx(a.H, rel=1e-11)


def test_poisson_decomposition_identity():
    # independent closed-form route for the Cauchy kernel on a ball
    spec = KernelSpec.poisson(2)
    for t in (0.5, 0.01):
        res = heat_content(spec, BALL_PROFILE, t)
        n1, n2 = ball_poisson_decomposition(2, t)
        recon = n1 - (1.0 / math.pi) * perimeter(BALL) * t * n2
        assert res.H == pytest.approx(recon, abs=1e-8, rel=1e-8)


def test_decomposition_domain():
    for bad_t in (0.0, -0.5, 2.0, 2.5):
        with pytest.raises(ValueError):
            ball_poisson_decomposition(2, bad_t)


def test_scaled_deficit_reports_error_estimate():
    val, err = scaled_deficit(KernelSpec.stable(1.5, 2), BALL_PROFILE, 1e-3)
    assert val > 0.0
    assert 0.0 < err < 1e-6 * val


# -- limit constants -----------------------------------------------------------------


def test_stable_limit_constant_formula():
    per = perimeter(BALL)
    assert stable_limit_constant(1.5, per) == pytest.approx(
        math.gamma(1 - 1 / 1.5) / math.pi * per, rel=1e-14
    )
    with pytest.raises(RegimeError):
        stable_limit_constant(1.0, per)


def test_theoretical_constants_and_tags():
    # Cauchy kernel on the ball: (1/pi) Per = 2, a sharp limit
    assert theoretical_constant(KernelSpec.poisson(2), BALL) == pytest.approx(2.0, rel=1e-14)
    assert constant_tag(KernelSpec.poisson(2), BALL) == TAG_LIMIT
    # same constant on a box is only an upper bound
    assert constant_tag(KernelSpec.poisson(2), Box((1.0, 1.0))) == TAG_UPPER_BOUND
    # gaussian: Per / sqrt(pi)
    assert theoretical_constant(KernelSpec.gaussian(2), BALL) == pytest.approx(
        2.0 * math.sqrt(math.pi), rel=1e-14
    )
    assert constant_tag(KernelSpec.gaussian(2), BALL) == TAG_LIMIT
    # poly family: envelope constant, bound only
    assert constant_tag(poly_poisson_spec(), BALL) == TAG_UPPER_BOUND


# -- sweeps ----------------------------------------------------------------------------


def test_sweep_report_shape_and_extrapolation():
    spec = KernelSpec.gaussian(2)
    rep = asymptotic_sweep(spec, BALL, t_grid=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6), profile=BALL_PROFILE)
    assert rep.regime == REGIME_GAUSSIAN
    assert rep.constant_tag == TAG_LIMIT
    assert len(rep.scaled_deficits) == 5
    assert rep.monotone
    assert rep.extrapolated_limit == pytest.approx(rep.theoretical_constant, rel=1e-3)
    assert rep.rel_error_at_smallest_t < 0.02


def test_sweep_requires_three_decreasing_points():
    spec = KernelSpec.gaussian(2)
    with pytest.raises(ValueError):
        asymptotic_sweep(spec, BALL, t_grid=(1e-2, 1e-3), profile=BALL_PROFILE)
    with pytest.raises(ValueError):
        asymptotic_sweep(spec, BALL, t_grid=(1e-3, 1e-2, 1e-4), profile=BALL_PROFILE)


def test_default_grid_is_decreasing():
    assert all(a > b for a, b in zip(DEFAULT_T_GRID, DEFAULT_T_GRID[1:]))


def test_sweep_deterministic_across_thread_counts(monkeypatch):
    spec = KernelSpec.stable(1.5, 2)
    grid = (1e-2, 1e-3, 1e-4)
    monkeypatch.setenv("HEATLAB_THREADS", "1")
    seq = asymptotic_sweep(spec, BALL, t_grid=grid, profile=BALL_PROFILE)
    monkeypatch.setenv("HEATLAB_THREADS", "3")
    par = asymptotic_sweep(spec, BALL, t_grid=grid, profile=BALL_PROFILE)
    assert seq.scaled_deficits == par.scaled_deficits
    assert seq.extrapolated_limit == par.extrapolated_limit


# -- bounds ------------------------------------------------------------------------------


def test_moment_bound_holds_on_ball():
    spec = KernelSpec.stable(1.5, 2)
    rep = bound_check_part_i(spec, BALL, t_grid=(1e-1, 1e-2, 1e-3), profile=BALL_PROFILE)
    assert rep.all_passed
    assert not rep.failures
    assert np.all(np.asarray(rep.lhs) <= np.asarray(rep.rhs))


def test_moment_bound_needs_finite_moment():
    with pytest.raises(DivergentMomentError):
        bound_check_part_i(KernelSpec.poisson(2), BALL, profile=BALL_PROFILE)


def test_envelope_bound_is_poly_only():
    with pytest.raises(RegimeError):
        bound_check_part_ii(KernelSpec.gaussian(2), BALL, profile=BALL_PROFILE)


def test_envelope_bound_needs_subdiameter_window():
    spec = poly_poisson_spec()
    with pytest.raises(RegimeError):
        # t^gamma beyond the covariance support radius
        bound_check_part_ii(spec, BALL, t_grid=(3.0, 0.1), profile=BALL_PROFILE)


def test_envelope_bound_holds_for_cauchy_instance():
    spec = poly_poisson_spec()
    rep = bound_check_part_ii(spec, BALL, t_grid=(0.5, 0.1, 1e-3, 1e-5), profile=BALL_PROFILE)
    assert rep.all_passed
    assert rep.extra["limsup_ratio"] <= 1.1
    assert rep.extra["envelope_constant"] == pytest.approx(2.0, rel=1e-12)


def test_poly_lambda_closed_form():
    # d=2 Cauchy instance: lambda = |B| kappa A_2 / ell
    #                             + kappa w_1 Per (ln ell + asinh(1) - 1/sqrt(2))
    spec = poly_poisson_spec()
    kappa = poisson_constant(2)
    ell = 2.0
    head = math.pi * kappa * 2.0 * math.pi / ell
    tail = kappa * 2.0 * perimeter(BALL) * (math.log(ell) + math.asinh(1.0) - 1.0 / math.sqrt(2.0))
    assert poly_lambda(spec, BALL) == pytest.approx(head + tail, rel=1e-10)

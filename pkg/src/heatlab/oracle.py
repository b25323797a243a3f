"""Brute-force Monte Carlo estimators, independent of the quadrature stack.

These share no evaluation route with the covariance/quadrature pipeline:
heat content is a plain pair average of the kernel over the bounding box,
and the alpha-perimeter integrates the exact chord-length power along
uniformly random lines.  Both use counter-based streams (Philox keyed by
(seed, batch)) with a fixed batch size and ordered reduction, so estimates
are bit-identical for a given (seed, samples, inputs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RegimeError, SamplingEfficiencyError, UnsupportedShapeError
from .geometry import Ball, Box, _batches, _bounding_box, _membership
from .kernel import eval_pt, unit_ball_volume, unit_sphere_area

_MIN_EFFICIENCY = 1e-3


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo value with its standard error and provenance."""

    value: float
    stderr: float
    samples: int
    seed: int

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.stderr >= 0.0:
            raise ValueError(f"stderr must be >= 0, got {self.stderr}")


def _finalize(total, total_sq, samples, seed):
    mean = total / samples
    if samples > 1:
        # stderr of the mean: sqrt( (E[z^2] - mean^2) / (N - 1) )
        err = math.sqrt(max(total_sq / samples - mean * mean, 0.0) / (samples - 1))
    else:
        err = 0.0
    return McEstimate(value=float(mean), stderr=float(err), samples=samples, seed=seed)


def mc_heat_content(spec, shape, t, samples=2**20, seed=0, kernel_override=None) -> McEstimate:
    """Pair estimator of H(t): V_box^2 * mean( 1_O(x) 1_O(y) p_t(x - y) ).

    Equivalent to rejection-sampling x, y uniform in Omega and averaging
    p_t(x - y) times |Omega|^2, but keeping the rejection randomness inside
    the estimator so the stderr reflects it.  ``kernel_override`` is a
    calibration hook replacing p_t by an arbitrary radial function (with the
    constant 1/|Omega| it returns |Omega| in expectation).  Raises when the
    bounding-box acceptance rate falls below 1e-3.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if spec.d != getattr(shape, "d", spec.d):
        raise ValueError("kernel and shape dimensions differ")
    lo, hi = _bounding_box(shape)
    member = _membership(shape)
    box_vol = float(np.prod(hi - lo))
    scale = box_vol * box_vol
    total = 0.0
    total_sq = 0.0
    accepted = 0
    samples = int(samples)
    first_batch = None
    for start, stop, rng in _batches(samples, seed):
        n = stop - start
        x = lo + (hi - lo) * rng.random((n, len(lo)))
        y = lo + (hi - lo) * rng.random((n, len(lo)))
        inside = member(x) & member(y)
        vals = np.zeros(n)
        if np.any(inside):
            r = np.linalg.norm(x[inside] - y[inside], axis=1)
            pt = kernel_override(r) if kernel_override is not None else eval_pt(spec, t, r)
            vals[inside] = scale * pt
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        accepted += int(np.count_nonzero(inside))
        if first_batch is None:
            first_batch = (accepted, n)
            if n >= 4096 and accepted < n * _MIN_EFFICIENCY / 10.0:
                raise SamplingEfficiencyError(
                    f"bounding-box pair acceptance {accepted / n:.2e} after first batch"
                )
    if accepted < samples * _MIN_EFFICIENCY:
        raise SamplingEfficiencyError(
            f"bounding-box pair acceptance {accepted / samples:.2e} < {_MIN_EFFICIENCY:g}"
        )
    return _finalize(total, total_sq, samples, seed)


def _perp_points(u, rng, n, d):
    """Uniform points on the radius-1 disk (segment for d=2) of u-perp."""
    if d == 2:
        perp = np.stack([-u[:, 1], u[:, 0]], axis=1)
        s = 2.0 * rng.random(n) - 1.0
        return s[:, None] * perp, np.abs(s)
    # d == 3: per-sample orthonormal frame via the least-aligned axis
    e = np.zeros((n, 3))
    e[np.arange(n), np.argmin(np.abs(u), axis=1)] = 1.0
    b1 = np.cross(u, e)
    b1 /= np.linalg.norm(b1, axis=1, keepdims=True)
    b2 = np.cross(u, b1)
    rad = np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    w = rad[:, None] * (np.cos(phi)[:, None] * b1 + np.sin(phi)[:, None] * b2)
    return w, rad


def _chord_lengths(shape, q, u):
    """Exact length of Omega intersected with the line {q + s u}."""
    if isinstance(shape, Ball):
        h2 = shape.radius**2 - np.einsum("ij,ij->i", q, q)
        return 2.0 * np.sqrt(np.maximum(h2, 0.0))
    if isinstance(shape, Box):
        half = np.asarray(shape.sides, dtype=float) / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-half[None, :] - q) / u
            t2 = (half[None, :] - q) / u
        t_lo = np.minimum(t1, t2)
        t_hi = np.maximum(t1, t2)
        parallel = np.abs(u) < 1e-300
        if np.any(parallel):
            inside = np.abs(q) <= half[None, :]
            t_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), t_lo)
            t_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), t_hi)
        enter = t_lo.max(axis=1)
        exit_ = t_hi.min(axis=1)
        return np.maximum(exit_ - enter, 0.0)
    raise UnsupportedShapeError(f"chord lengths unavailable for {type(shape).__name__}")


def mc_alpha_perimeter(shape, alpha, samples=2**20, seed=0) -> McEstimate:
    """Monte Carlo alpha-perimeter via random lines and exact chord powers.

    Writing the pair integral over Omega x Omega^c in line coordinates, a
    convex body contributes L^{1-alpha} / (alpha(1-alpha)) per line of chord
    length L, so

        P_alpha = A_d * w_{d-1} T^{d-1} * E[ L^{1-alpha} ] / (alpha (1-alpha))

    with (u, w) a uniform direction and a uniform point on the radius-T disk
    of u-perp, T the circumradius.  The per-sample value is bounded by
    diam^{1-alpha}, so the variance is finite for every alpha in (0,1) --
    unlike naive pair sampling of |x-y|^{-d-alpha}, whose second moment
    diverges along the boundary.
    """
    if not 0.0 < alpha < 1.0:
        raise RegimeError(f"alpha-perimeter requires alpha in (0,1), got {alpha}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not isinstance(shape, (Ball, Box)):
        raise UnsupportedShapeError("line sampling needs a convex closed-form shape")
    d = shape.d if isinstance(shape, Ball) else len(shape.sides)
    if d not in (2, 3):
        raise UnsupportedShapeError("line sampling implemented for d in {2, 3}")
    lo, hi = _bounding_box(shape)
    T = float(np.sqrt(np.sum(np.maximum(lo**2, hi**2))))
    pref = unit_sphere_area(d) * unit_ball_volume(d - 1) * T ** (d - 1) / (alpha * (1.0 - alpha))
    total = 0.0
    total_sq = 0.0
    samples = int(samples)
    for start, stop, rng in _batches(samples, seed):
        n = stop - start
        u = rng.standard_normal((n, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        w_unit, _ = _perp_points(u, rng, n, d)
        q = T * w_unit
        L = _chord_lengths(shape, q, u)
        vals = pref * np.where(L > 0.0, L ** (1.0 - alpha), 0.0)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
    return _finalize(total, total_sq, samples, seed)

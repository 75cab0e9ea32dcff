"""Likelihoods and maximum-likelihood phase estimators.

Homodyne likelihoods depend on a batch only through ``(n, sum x^2)`` and
the POVM setting, so the vectorized helpers below work from those
sufficient statistics; the public wrappers accept raw batches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import HALF_PI, lossy_optimal_phase, lossy_quadrature_variance, wrap_phase
from .measurements import HeterodyneBatch, HomodyneBatch, heterodyne_axis_variances

INV_GOLDEN = (math.sqrt(5) - 1) / 2
LOG_2PI = math.log(2 * math.pi)


class FlatLikelihoodError(ValueError):
    """The likelihood carries no phase information for this sample."""


@dataclass
class EstimateResult:
    estimate: float
    stationary: bool
    discarded: int = 0
    loglik_at_estimate: float = float("nan")
    period: float = HALF_PI


def _outcomes(sample):
    if isinstance(sample, (HomodyneBatch, HeterodyneBatch)):
        sample = sample.outcomes
    sample = np.asarray(sample)
    if sample.size == 0:
        raise ValueError("sample must be non-empty")
    return sample


# -- homodyne ---------------------------------------------------------------

def homodyne_term(theta, n, sumsq, setting, r, transmission=1.0):
    """Homodyne log-likelihood of a batch given its sufficient statistics."""
    phi = wrap_phase(np.asarray(theta) + lossy_optimal_phase(r, transmission) - setting, HALF_PI)
    v = lossy_quadrature_variance(r, phi, transmission)
    return -0.5 * n * (LOG_2PI + np.log(v)) - sumsq / (2 * v)


def loglik_homodyne(sample, r, povm_setting, theta, transmission=1.0):
    """Log-likelihood of homodyne outcomes taken at ``povm_setting``; vectorized in ``theta``."""
    x = _outcomes(sample)
    return homodyne_term(theta, x.size, np.dot(x, x), povm_setting, r, transmission)


def variance_bounds(r, transmission=1.0):
    """Range of the outcome variance over the effective angle."""
    return (lossy_quadrature_variance(r, 0.0, transmission),
            lossy_quadrature_variance(r, HALF_PI, transmission))


def closed_form_angle(mean_sq, r, transmission=1.0):
    """Effective angle whose variance equals ``mean_sq``, clamped to ``[0, pi/2]``.

    Returns ``(angle, stationary)``; out-of-range second moments map to the
    nearest boundary angle with ``stationary`` False.
    """
    mean_sq = np.asarray(mean_sq, dtype=float)
    t = transmission
    m = (mean_sq - (1 - t)) / t
    e2 = math.exp(2 * r)
    lo, hi = variance_bounds(r, t)
    arg = math.exp(r) * np.sqrt(np.clip(e2 - m, 0, None)) / math.sqrt(math.expm1(4 * r))
    angle = np.arccos(np.clip(arg, -1.0, 1.0))
    stationary = (mean_sq >= lo) & (mean_sq <= hi)
    angle = np.where(mean_sq > hi, HALF_PI, np.where(mean_sq < lo, 0.0, angle))
    return angle[()], stationary[()]


def estimate_from_angle(angle, r, povm_setting, transmission=1.0):
    return wrap_phase(angle - lossy_optimal_phase(r, transmission) + np.asarray(povm_setting), HALF_PI)


def mle_homodyne_closed_form(sample, r, povm_setting, transmission=1.0) -> EstimateResult:
    """Closed-form MLE of a single homodyne batch over ``[0, pi/2)``."""
    if r <= 0:
        raise ValueError("r must be > 0")
    x = _outcomes(sample)
    angle, stationary = closed_form_angle(np.dot(x, x) / x.size, r, transmission)
    est = float(estimate_from_angle(angle, r, povm_setting, transmission))
    ll = float(loglik_homodyne(x, r, povm_setting, est, transmission))
    return EstimateResult(est, bool(stationary), 0, ll, HALF_PI)


def truncated_mean_sq(x2_desc, threshold):
    """Drop the largest squared outcomes until the mean is at most ``threshold``.

    ``x2_desc`` holds squared outcomes sorted in descending order along the
    last axis. Returns ``(mean_sq, discarded)``; when every outcome must go
    the mean is ``inf`` and ``discarded`` equals the batch size.
    """
    x2_desc = np.asarray(x2_desc, dtype=float)
    n = x2_desc.shape[-1]
    # remaining[..., k] = sum of the n - k smallest values
    tail = np.cumsum(x2_desc[..., ::-1], axis=-1)[..., ::-1]
    kept = n - np.arange(n)
    ok = tail <= threshold * kept
    discarded = np.where(ok.any(axis=-1), ok.argmax(axis=-1), n)
    idx = np.minimum(discarded, n - 1)
    mean_sq = np.take_along_axis(tail, idx[..., None], axis=-1)[..., 0] / (n - idx)
    mean_sq = np.where(discarded == n, np.inf, mean_sq)
    return mean_sq[()], discarded[()]


def mle_homodyne_truncated(sample, r, povm_setting, transmission=1.0) -> EstimateResult:
    """Modified MLE: largest-magnitude outcomes are removed until the closed form is real."""
    if r <= 0:
        raise ValueError("r must be > 0")
    x = _outcomes(sample)
    _, hi = variance_bounds(r, transmission)
    mean_sq, discarded = truncated_mean_sq(np.sort(x * x)[::-1], hi)
    if discarded == x.size:
        est = float(estimate_from_angle(HALF_PI, r, povm_setting, transmission))
        return EstimateResult(est, False, int(discarded), float("nan"), HALF_PI)
    angle, stationary = closed_form_angle(mean_sq, r, transmission)
    est = float(estimate_from_angle(angle, r, povm_setting, transmission))
    kept = np.sort(np.abs(x))[: x.size - discarded]
    ll = float(loglik_homodyne(kept, r, povm_setting, est, transmission))
    return EstimateResult(est, bool(stationary), int(discarded), ll, HALF_PI)


# -- heterodyne -------------------------------------------------------------

def heterodyne_coefficients(r, transmission=1.0):
    """``(a, b, log_norm)`` with log-density ``-log_norm - a|z|^2 - b Re[z^2 e^{2i theta}]``.

    At unit transmission ``a = 1``, ``b = tanh r`` and ``log_norm = log(pi cosh r)``.
    """
    v_sq, v_anti = heterodyne_axis_variances(r, transmission)
    a = 0.25 / v_sq + 0.25 / v_anti
    b = 0.25 / v_sq - 0.25 / v_anti
    return a, b, math.log(2 * math.pi) + 0.5 * math.log(v_sq * v_anti)


def heterodyne_term(theta, n, sum_abs2, sum_sq, r, transmission=1.0):
    """Heterodyne log-likelihood from ``(n, sum |z|^2, sum z^2)``."""
    a, b, log_norm = heterodyne_coefficients(r, transmission)
    return -n * log_norm - a * sum_abs2 - b * np.real(np.exp(2j * np.asarray(theta)) * sum_sq)


def loglik_heterodyne(sample, r, theta, transmission=1.0):
    """Log-likelihood of complex heterodyne outcomes; pi-periodic in ``theta``."""
    z = _outcomes(sample)
    return heterodyne_term(theta, z.size, np.sum(np.abs(z) ** 2), np.sum(z * z), r, transmission)


def heterodyne_angle(sum_sq):
    """Maximizer ``(pi - arg sum_sq) / 2`` wrapped to ``[0, pi)``."""
    return wrap_phase((math.pi - np.angle(sum_sq)) / 2, math.pi)


def mle_heterodyne_closed_form(sample, r=None, transmission=1.0) -> EstimateResult:
    """Closed-form heterodyne MLE over ``[0, pi)``."""
    z = _outcomes(sample)
    s = np.sum(z * z)
    if s == 0:
        raise FlatLikelihoodError("sum of squared outcomes vanishes; likelihood is flat")
    est = float(heterodyne_angle(s))
    ll = float(loglik_heterodyne(z, r, est, transmission)) if r is not None else float("nan")
    return EstimateResult(est, True, 0, ll, math.pi)


# -- numeric maximization ---------------------------------------------------

def golden_section_max(fun, lo, hi, tol=1e-10):
    """Maximize ``fun`` on ``[lo, hi]`` by golden-section search.

    Works elementwise on arrays of brackets so that many independent
    problems advance in lockstep. Returns ``(x, fun(x), interior)`` where
    ``interior`` is False if the search collapsed onto a bracket end.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    lo0, hi0 = lo.copy(), hi.copy()
    width = float(np.max(hi - lo))
    n_iter = max(0, math.ceil(math.log(tol / width) / math.log(INV_GOLDEN))) if width > tol else 0
    c = hi - INV_GOLDEN * (hi - lo)
    d = lo + INV_GOLDEN * (hi - lo)
    fc, fd = fun(c), fun(d)
    for _ in range(n_iter):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new = np.where(left, hi - INV_GOLDEN * (hi - lo), lo + INV_GOLDEN * (hi - lo))
        fnew = fun(new)
        c, d, fc, fd = (np.where(left, new, d), np.where(left, c, new),
                        np.where(left, fnew, fd), np.where(left, fc, fnew))
    x = 0.5 * (lo + hi)
    fx = fun(x)
    interior = (x - lo0 > 2 * tol) & (hi0 - x > 2 * tol)
    return x[()], fx[()], interior[()]


def refine_grid_max(fun, grid, grid_values, tol=1e-10):
    """Golden-section refinement around the best grid point of each row.

    ``grid_values`` has shape ``(..., G)``; ``fun`` maps an array of points
    shaped like the leading dims to log-likelihoods. The refined point is
    kept only if it beats the grid maximum.
    """
    step = grid[1] - grid[0]
    best = np.argmax(grid_values, axis=-1)
    x0 = grid[best]
    f0 = np.take_along_axis(grid_values, best[..., None], axis=-1)[..., 0]
    x, fx, interior = golden_section_max(fun, x0 - step, x0 + step, tol)
    better = fx >= f0
    return np.where(better, x, x0)[()], np.where(better, fx, f0)[()], (better & interior)[()]


def periodic_grid(a, b, points):
    return a + (b - a) * np.arange(points) / points


def mle_numeric(loglik, interval=(0.0, HALF_PI), grid_points=720, tol=1e-10) -> EstimateResult:
    """Maximize a scalar log-likelihood over a periodic interval ``[a, b)``.

    Coarse uniform grid, then golden-section refinement of the best cell.
    """
    a, b = interval
    grid = periodic_grid(a, b, grid_points)
    values = np.array([loglik(t) for t in grid], dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("log-likelihood is not finite on the search grid")

    def scalar(t):
        out = loglik(float(t))
        if not np.isfinite(out):
            raise ValueError(f"log-likelihood is not finite at {t!r}")
        return out

    x, fx, interior = refine_grid_max(np.vectorize(scalar, otypes=[float]), grid, values, tol)
    period = b - a
    est = float(a + (x - a) % period)
    return EstimateResult(est, bool(interior), 0, float(fx), period)


__all__ = [
    "EstimateResult", "FlatLikelihoodError", "closed_form_angle", "golden_section_max",
    "heterodyne_term", "homodyne_term", "loglik_heterodyne", "loglik_homodyne",
    "mle_heterodyne_closed_form", "mle_homodyne_closed_form", "mle_homodyne_truncated",
    "mle_numeric", "refine_grid_max", "truncated_mean_sq",
]

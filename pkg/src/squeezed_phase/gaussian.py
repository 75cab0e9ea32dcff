"""Closed-form quantities of the squeezed-vacuum homodyne model.

Quadrature variances use the convention in which the vacuum has unit
variance, so a squeezed vacuum of strength ``r`` measured at effective
angle ``theta`` has variance ``exp(-2r) cos^2 + exp(2r) sin^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HALF_PI = 0.5 * math.pi
PERIODS = (HALF_PI, math.pi)


def _check_finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise ValueError(f"{name} must be finite, got {value!r}")


def _check_transmission(transmission):
    if not np.all((np.asarray(transmission) >= 0) & (np.asarray(transmission) <= 1)):
        raise ValueError(f"transmission must lie in [0, 1], got {transmission!r}")


@dataclass(frozen=True)
class SqueezedProbe:
    """Squeezed-vacuum probe together with its channel and noise parameters.

    Attributes
    ----------
    r : float
        Nominal squeezing strength.
    transmission : float
        Beam-splitter transmission of the loss channel, 1 means lossless.
    sigma_r : float
        Standard deviation of the per-copy squeezing strength.
    sigma_lo : float
        Standard deviation (rad) of the local-oscillator phase per batch.
    """

    r: float
    transmission: float = 1.0
    sigma_r: float = 0.0
    sigma_lo: float = 0.0

    def __post_init__(self):
        _check_finite(r=self.r, transmission=self.transmission,
                      sigma_r=self.sigma_r, sigma_lo=self.sigma_lo)
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        _check_transmission(self.transmission)
        if self.sigma_r < 0 or self.sigma_lo < 0:
            raise ValueError("noise standard deviations must be >= 0")

    @property
    def is_ideal(self) -> bool:
        return self.transmission == 1.0 and self.sigma_r == 0.0 and self.sigma_lo == 0.0

    def optimal_phase(self) -> float:
        """Effective angle at which the (lossy) homodyne information peaks."""
        return lossy_optimal_phase(self.r, self.transmission)


def quadrature_variance(r, theta):
    """Homodyne outcome variance of squeezed vacuum at effective angle ``theta``."""
    _check_finite(r=r, theta=theta)
    c = np.cos(theta)
    s = np.sin(theta)
    return np.exp(-2 * r) * c * c + np.exp(2 * r) * s * s


def lossy_quadrature_variance(r, theta, transmission):
    """Quadrature variance after a beam splitter of given transmission.

    The squeezed quadrature is mixed with unit-variance vacuum:
    ``T * quadrature_variance(r, theta) + (1 - T)``.
    """
    _check_transmission(transmission)
    return transmission * quadrature_variance(r, theta) + (1 - transmission)


def optimal_phase(r):
    """Angle ``arccos(tanh 2r) / 2`` where homodyne information equals the QFI."""
    _check_finite(r=r)
    if np.any(np.asarray(r) <= 0):
        raise ValueError("optimal phase is undefined for r <= 0 (homodyne information vanishes)")
    return 0.5 * np.arccos(np.tanh(2 * np.asarray(r, dtype=float)))[()]


def lossy_optimal_phase(r, transmission):
    """Angle maximizing homodyne information of the lossy squeezed state.

    Reduces to :func:`optimal_phase` at unit transmission.
    """
    _check_transmission(transmission)
    if np.any(np.asarray(r) <= 0):
        raise ValueError("optimal phase is undefined for r <= 0 (homodyne information vanishes)")
    t = np.asarray(transmission, dtype=float)
    ratio = t * np.sinh(2 * r) / (t * np.cosh(2 * r) + 1 - t)
    return 0.5 * np.arccos(ratio)[()]


def optimal_squeezing(theta):
    """Squeezing strength that makes ``theta`` the optimal homodyne angle.

    Angles above pi/4 give a negative value, i.e. the anti-squeezed quadrature.
    """
    _check_finite(theta=theta)
    th = np.asarray(theta, dtype=float)
    if np.any((th <= 0) | (th >= HALF_PI)):
        raise ValueError(f"theta must lie in (0, pi/2), got {theta!r}")
    return (-0.5 * np.log(np.tan(th)))[()]


def wrap_phase(x, period=HALF_PI):
    """Canonical representative of ``x`` in ``[0, period)``."""
    if not any(math.isclose(period, p) for p in PERIODS):
        raise ValueError(f"period must be pi/2 or pi, got {period!r}")
    x = np.asarray(x, dtype=float)
    out = x - period * np.floor(x / period)
    # floating-point rounding can land exactly on the period
    out = np.where(out >= period, out - period, out)
    return out[()]


def mean_photon_number(r):
    return np.sinh(r) ** 2

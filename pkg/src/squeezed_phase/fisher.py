"""Fisher information, quantum Fisher information and precision bounds."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .gaussian import (
    SqueezedProbe,
    _check_transmission,
    lossy_optimal_phase,
    mean_photon_number,
    optimal_phase,
    quadrature_variance,
)

GH_NODES = 41
GH_MAX_NODES = 41 * 2 ** 2
GH_TOL = 1e-8


class QuadratureError(RuntimeError):
    """Gauss-Hermite expectation failed to converge under node doubling."""


def qfi_squeezed_vacuum(r):
    """Quantum Fisher information ``2 sinh^2(2r)`` of one squeezed-vacuum copy."""
    return 2 * np.sinh(2 * np.asarray(r, dtype=float)) ** 2


def fisher_homodyne(r, theta):
    """Homodyne Fisher information at effective angle ``theta``."""
    s2 = quadrature_variance(r, theta)
    return 2 * np.sinh(2 * r) ** 2 * np.sin(2 * theta) ** 2 / s2 ** 2


def fisher_homodyne_lossy(r, theta, transmission):
    """Homodyne Fisher information of the lossy state at effective angle ``theta``.

    The outcome is Gaussian with variance ``V = T sigma^2 + 1 - T``, so the
    information is ``(dV/dtheta)^2 / (2 V^2)``.
    """
    _check_transmission(transmission)
    v = transmission * quadrature_variance(r, theta) + 1 - transmission
    dv = 2 * transmission * np.sinh(2 * r) * np.sin(2 * theta)
    return dv ** 2 / (2 * v ** 2)


def fisher_heterodyne(r):
    """Heterodyne Fisher information ``4 sinh^2(r)``, independent of the phase."""
    return 4 * np.sinh(np.asarray(r, dtype=float)) ** 2


def qfi_lossy(r, transmission):
    """QFI of squeezed vacuum sent through a loss channel of transmission ``T``."""
    _check_transmission(transmission)
    t = np.asarray(transmission, dtype=float)
    return (t ** 2 / (1 + 2 * t * (1 - t) * np.sinh(r) ** 2)) * qfi_squeezed_vacuum(r)


def fisher_homodyne_lossy_max(r, transmission):
    """Maximum over the angle of the lossy homodyne Fisher information."""
    _check_transmission(transmission)
    t = np.asarray(transmission, dtype=float)
    return (t ** 2 / (1 + 4 * t * (1 - t) * np.sinh(r) ** 2)) * qfi_squeezed_vacuum(r)


def _gauss_hermite_mean(func, sigma, breakpoints=()):
    """E[func(sigma * Z)] for standard normal Z.

    Gauss-Hermite with node doubling; integrands with narrow dips (wide LO
    jitter) fall back to adaptive quadrature split at ``breakpoints``.
    """
    if sigma == 0:
        return float(func(np.zeros(1))[0])
    n = GH_NODES
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    prev = np.dot(weights, func(sigma * nodes)) / weights.sum()
    while n < GH_MAX_NODES:
        n *= 2
        nodes, weights = np.polynomial.hermite_e.hermegauss(n)
        cur = np.dot(weights, func(sigma * nodes)) / weights.sum()
        if abs(cur - prev) <= GH_TOL * max(1.0, abs(cur)):
            return float(cur)
        prev = cur

    lim = 12 * sigma
    pts = sorted(b for b in breakpoints if -lim < b < lim)

    def integrand(u):
        return func(np.array([u]))[0] * np.exp(-0.5 * (u / sigma) ** 2)

    value, err = integrate.quad(integrand, -lim, lim, points=pts or None,
                                epsabs=0, epsrel=1e-11, limit=1000)
    value /= sigma * np.sqrt(2 * np.pi)
    if err / (sigma * np.sqrt(2 * np.pi)) > GH_TOL * max(1.0, abs(value)):
        raise QuadratureError(f"expectation not converged (error estimate {err:.3g})")
    return float(value)


def conditional_fisher_state_prep(r0, sigma_r, theta):
    """Expected homodyne information when the squeezing is Normal(r0, sigma_r^2)."""
    if sigma_r < 0:
        raise ValueError("sigma_r must be >= 0")
    return _gauss_hermite_mean(lambda dr: fisher_homodyne(r0 + dr, theta), sigma_r)


def conditional_fisher_lo_noise(r, sigma_lo):
    """Expected homodyne information with LO phase jitter about the optimal setting."""
    if sigma_lo < 0:
        raise ValueError("sigma_lo must be >= 0")
    theta_opt = optimal_phase(r)
    # information vanishes where the effective angle hits a multiple of pi/2
    zeros = [k * np.pi / 2 - theta_opt for k in range(-8, 9)]
    return _gauss_hermite_mean(lambda d: fisher_homodyne(r, theta_opt + d), sigma_lo, zeros)


def snl_bound(mean_photons, n):
    """Shot-noise-limited variance ``1 / (4 N E[n])``."""
    return 1.0 / (4 * n * mean_photons)


@dataclass
class FisherReport:
    """Analytic informations and N-copy variance bounds on a phase grid."""

    theta_grid: np.ndarray
    qfi: float
    cfi_homodyne: np.ndarray
    cfi_heterodyne: float
    n: int = 1
    mean_photons: float = field(default=0.0)

    @property
    def qcrb(self):
        return 1.0 / (self.n * self.qfi)

    @property
    def snl(self):
        return snl_bound(self.mean_photons, self.n)

    @property
    def het_limit(self):
        return 1.0 / (self.n * self.cfi_heterodyne)

    def rows(self):
        for theta, cfi in zip(self.theta_grid, self.cfi_homodyne):
            yield {"theta": float(theta), "cfi_homodyne": float(cfi), "qfi": float(self.qfi),
                   "qcrb": self.qcrb, "snl": self.snl, "het_limit": self.het_limit}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=FISHER_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in self.rows():
                writer.writerow({k: repr(v) for k, v in row.items()})


FISHER_COLUMNS = ["theta", "cfi_homodyne", "qfi", "qcrb", "snl", "het_limit"]


def fisher_report(probe: SqueezedProbe, theta_grid, n=1) -> FisherReport:
    """Build a :class:`FisherReport` for ``probe`` (loss-aware, noise-free)."""
    theta_grid = np.asarray(theta_grid, dtype=float)
    t = probe.transmission
    if t == 1:
        cfi = fisher_homodyne(probe.r, theta_grid)
    else:
        cfi = fisher_homodyne_lossy(probe.r, theta_grid, t)
    return FisherReport(theta_grid=theta_grid, qfi=float(qfi_lossy(probe.r, t)),
                        cfi_homodyne=cfi, cfi_heterodyne=float(fisher_heterodyne(probe.r)),
                        n=n, mean_photons=float(mean_photon_number(probe.r)))


__all__ = [
    "FisherReport", "QuadratureError", "conditional_fisher_lo_noise",
    "conditional_fisher_state_prep", "fisher_heterodyne", "fisher_homodyne",
    "fisher_homodyne_lossy", "fisher_homodyne_lossy_max", "fisher_report",
    "lossy_optimal_phase", "qfi_lossy", "qfi_squeezed_vacuum", "snl_bound",
]

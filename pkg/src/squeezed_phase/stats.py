"""Statistics of phase estimates and analytic probabilities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy import stats as sps

from .gaussian import HALF_PI, quadrature_variance, wrap_phase
from .measurements import effective_argument

_EPS = 1e-16
_MAX_ITER = 100_000


@dataclass
class EstimateBatch:
    """Final estimates of repeated runs at one true phase."""

    theta_true: float
    estimates: np.ndarray
    period: float = HALF_PI
    batch: int = 0
    fingerprint: str = ""
    failures: list = field(default_factory=list)

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=float)
        if self.estimates.size == 0:
            raise ValueError("estimate batch is empty")

    def errors(self):
        """Signed estimation errors wrapped to ``(-P/2, P/2]``."""
        return signed_error(self.estimates, self.theta_true, self.period)


@dataclass
class MomentReport:
    bias: float
    holevo_variance: float
    skewness: float
    excess_kurtosis: float


def signed_error(estimates, theta_true, period):
    d = np.asarray(estimates, dtype=float) - theta_true
    return -(wrap_phase(-d + period / 2, period) - period / 2)


def _unpack(batch, theta_true=None, period=None):
    if isinstance(batch, EstimateBatch):
        return batch.estimates, batch.theta_true, batch.period
    return np.asarray(batch, dtype=float), theta_true, period if period is not None else HALF_PI


def holevo_variance(batch, theta_true=None, period=None):
    """Holevo variance ``(<cos k(est - theta)>^-2 - 1) / k^2`` with ``k = 2 pi / P``.

    Returns ``inf`` when the mean cosine is not positive (estimates are
    spread over the whole period and the variance is undefined).
    """
    est, theta, period = _unpack(batch, theta_true, period)
    if est.size == 0:
        raise ValueError("estimate batch is empty")
    k = 2 * math.pi / period
    c = float(np.mean(np.cos(k * (est - theta))))
    if c <= 0:
        return math.inf
    return (c ** -2 - 1) / k ** 2


# -- chi-squared ------------------------------------------------------------

def _gamma_series(a, x):
    # P(a, x) by the power series, valid for x < a + 1
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a, x):
    # Q(a, x) by modified Lentz continued fraction, valid for x >= a + 1
    tiny = 1e-300
    b = x + 1 - a
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma(a, x):
    """``(P(a, x), Q(a, x))``, the regularized lower and upper incomplete gammas."""
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 0.0, 1.0
    if x < a + 1:
        p = _gamma_series(a, x)
        return p, 1 - p
    q = _gamma_cf(a, x)
    return 1 - q, q


@np.vectorize
def chi2_cdf(x, dof):
    """CDF of the chi-squared distribution with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    return regularized_gamma(dof / 2, x / 2)[0]


@np.vectorize
def chi2_sf(x, dof):
    if dof < 1:
        raise ValueError("dof must be >= 1")
    return regularized_gamma(dof / 2, x / 2)[1]


def stationary_point_prob(theta, r, nu):
    """Probability that the first-step likelihood peaks at an interior stationary point.

    The closed-form MLE is real when ``sum x^2 <= nu e^{2r}``; with outcomes
    of variance ``sigma^2(theta)`` that sum is ``sigma^2 chi^2_nu``.
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    thr = math.exp(2 * r) * nu / quadrature_variance(r, theta)
    return chi2_cdf(thr, nu)[()]


def nonstationary_prob(theta, r, nu):
    thr = math.exp(2 * r) * nu / quadrature_variance(r, theta)
    return chi2_sf(thr, nu)[()]


def _simpson(y, h):
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def averaged_nonstationary_prob(r, nu, nodes=2001, rtol=1e-8, max_nodes=64001):
    """Non-stationary probability averaged over a uniform first setting.

    A uniform setting on ``[0, pi/2)`` makes the effective angle uniform on
    the same interval, so this is ``(2/pi) * int_0^{pi/2} (1 - P_SP)``.
    Composite Simpson, doubling the node count until ``rtol`` is met.
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    prev = None
    n = nodes
    while n <= max_nodes:
        x = np.linspace(0, HALF_PI, n)
        value = _simpson(nonstationary_prob(x, r, nu), x[1] - x[0]) / HALF_PI
        if prev is not None and abs(value - prev) <= rtol * abs(value) + 1e-300:
            return float(value)
        prev = value
        n = 2 * n - 1
    raise ArithmeticError("Simpson quadrature did not reach the requested tolerance")


# -- Bhattacharyya coefficients ---------------------------------------------

def bhattacharyya_homodyne(theta, theta0, povm_setting, r, nu=1):
    """Overlap ``[2 s s0 / (s^2 + s0^2)]^{nu/2}`` of two homodyne sample densities."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    v = quadrature_variance(r, effective_argument(theta, povm_setting, r))
    v0 = quadrature_variance(r, effective_argument(theta0, povm_setting, r))
    return (2 * np.sqrt(v * v0) / (v + v0)) ** (nu / 2)


def bhattacharyya_heterodyne(theta, theta0, r, nu=1):
    """Overlap ``[cosh r sqrt(1 - cos^2(d) tanh^2 r)]^{-nu}`` of heterodyne densities."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if r < 0:
        raise ValueError("r must be >= 0")
    # cosh r sqrt(1 - cos^2 d tanh^2 r) == sqrt(1 + sin^2 d sinh^2 r), which stays >= 1 in floating point
    s = np.sin(np.asarray(theta) - theta0)
    return (1 + (s * np.sinh(r)) ** 2) ** (-nu / 2)


# -- moments and normality --------------------------------------------------

def moment_report(batch: EstimateBatch) -> MomentReport:
    """Bias, Holevo variance, skewness and excess kurtosis of the wrapped errors."""
    if batch.estimates.size < 4:
        raise ValueError("moment report needs at least 4 estimates")
    k = 2 * math.pi / batch.period
    err = batch.errors()
    bias = math.atan2(np.mean(np.sin(k * err)), np.mean(np.cos(k * err))) / k
    return MomentReport(bias=float(bias), holevo_variance=holevo_variance(batch),
                        skewness=float(sps.skew(err)), excess_kurtosis=float(sps.kurtosis(err)))


def _ad_inf_cdf(z):
    # Marsaglia & Marsaglia (2004) limiting distribution of A^2, case 0
    if z <= 0:
        return 0.0
    if z < 2:
        return (math.exp(-1.2337141 / z) / math.sqrt(z)
                * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z)
                                                       * z) * z) * z) * z))
    return math.exp(-_ad_inf_tail_exponent(z))


def _ad_inf_tail_exponent(z):
    return math.exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z)


def _ad_inf_sf(z):
    """Upper tail of the limiting A^2 law.

    The fitted form is only good to about ``z = 8``. Past that the law is
    dominated by its largest term, ``chi^2_1 / 2``, and the remaining terms
    multiply the tail by ``prod_j (1 - 2 / (j (j + 1)))^{-1/2} = sqrt(3)``.
    """
    if z < 2:
        return 1.0 - _ad_inf_cdf(z)
    if z < 8:
        return -math.expm1(-_ad_inf_tail_exponent(z))
    return math.sqrt(3.0) * float(special.erfc(math.sqrt(z)))


def anderson_darling_normal(samples, mu, sigma2):
    """Anderson-Darling test against the fully specified ``Normal(mu, sigma2)``.

    Returns ``(A2, p_value)`` with the asymptotic p-value.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 8:
        raise ValueError("Anderson-Darling test needs at least 8 samples")
    if not sigma2 > 0:
        raise ValueError("null variance must be positive")
    if np.ptp(x) == 0:
        raise ValueError("sample is constant; test is degenerate")
    z = np.sort((x - mu) / math.sqrt(sigma2))
    log_cdf = special.log_ndtr(z)
    log_sf = special.log_ndtr(-z[::-1])
    i = np.arange(1, n + 1)
    a2 = -n - np.sum((2 * i - 1) * (log_cdf + log_sf)) / n
    return float(a2), float(_ad_inf_sf(a2))


def fisher_combine(p_values):
    """Fisher's method: upper chi-squared tail of ``-2 sum log p`` with ``2k`` dof."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        raise ValueError("no p-values to combine")
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("p-values must lie in (0, 1]")
    stat = -2 * np.sum(np.log(p))
    return float(chi2_sf(stat, 2 * p.size))


__all__ = [
    "EstimateBatch", "MomentReport", "anderson_darling_normal", "averaged_nonstationary_prob",
    "bhattacharyya_heterodyne", "bhattacharyya_homodyne", "chi2_cdf", "chi2_sf",
    "fisher_combine", "holevo_variance", "moment_report", "nonstationary_prob",
    "regularized_gamma", "signed_error", "stationary_point_prob",
]

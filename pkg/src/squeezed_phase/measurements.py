"""Exact samplers for homodyne and heterodyne outcomes of squeezed vacuum."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .gaussian import HALF_PI, SqueezedProbe, lossy_optimal_phase, lossy_quadrature_variance, wrap_phase

OUTCOME_COLUMNS = ["run", "step", "index", "value_re", "value_im"]


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by a root seed and a stream id.

    Identical ``(root_seed, stream_id)`` pairs give bit-identical draws;
    distinct ids give independent streams (``SeedSequence`` spawn keys).
    Normal deviates come from numpy's ``PCG64`` + ziggurat sampler.
    """

    root_seed: int
    stream_id: tuple = ()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.root_seed, spawn_key=tuple(int(i) for i in self.stream_id))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, *key) -> "RngStream":
        return RngStream(self.root_seed, tuple(self.stream_id) + tuple(key))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass
class HomodyneBatch:
    outcomes: np.ndarray
    povm_setting: float
    # hidden from estimators, kept for test oracles
    effective_arg: float = field(default=float("nan"), repr=False)


@dataclass
class HeterodyneBatch:
    outcomes: np.ndarray


def effective_argument(theta_true, povm_setting, r, transmission=1.0):
    """Angle at which the rotated homodyne POVM samples the probe.

    ``wrap(theta + theta_opt - setting, pi/2)``; at ``setting == theta`` this
    is the optimal angle, so the rotated measurement is locally optimal there.
    """
    theta_opt = lossy_optimal_phase(r, transmission)
    return wrap_phase(np.asarray(theta_true) + theta_opt - np.asarray(povm_setting), HALF_PI)


def homodyne_variance(probe: SqueezedProbe, theta_true, povm_setting, dr=0.0, dlo=0.0):
    """Outcome variance for (possibly per-copy perturbed) squeezing and LO phase."""
    phi = effective_argument(theta_true, np.asarray(povm_setting) + dlo, probe.r, probe.transmission)
    return lossy_quadrature_variance(probe.r + np.asarray(dr), phi, probe.transmission)


def heterodyne_axis_variances(r, transmission=1.0):
    """Variances of the squeezed and anti-squeezed heterodyne components.

    Heterodyne adds one unit of vacuum to each quadrature and halves the
    scale, so each component has variance ``(V_quadrature + 1) / 4``.
    """
    t = transmission
    v_sq = (t * np.exp(-2 * np.asarray(r)) + 1 - t + 1) / 4
    v_anti = (t * np.exp(2 * np.asarray(r)) + 1 - t + 1) / 4
    return v_sq, v_anti


def heterodyne_from_normals(z, probe: SqueezedProbe, theta_true, dr=0.0):
    """Map standard-normal pairs ``z[..., 0:2]`` to heterodyne outcomes."""
    v_sq, v_anti = heterodyne_axis_variances(probe.r + np.asarray(dr), probe.transmission)
    beta = z[..., 0] * np.sqrt(v_sq) + 1j * z[..., 1] * np.sqrt(v_anti)
    return beta * np.exp(-1j * theta_true)


def sample_homodyne(probe: SqueezedProbe, theta_true, povm_setting, n, rng) -> HomodyneBatch:
    """Draw ``n`` homodyne outcomes at the rotated setting ``povm_setting``.

    Squeezing noise perturbs every copy independently; LO noise jitters the
    setting once per batch.
    """
    if n < 1:
        raise ValueError("sample size must be >= 1")
    gen = as_generator(rng)
    z = gen.standard_normal(n)
    dr = probe.sigma_r * gen.standard_normal(n) if probe.sigma_r > 0 else 0.0
    dlo = probe.sigma_lo * gen.standard_normal() if probe.sigma_lo > 0 else 0.0
    var = homodyne_variance(probe, theta_true, povm_setting, dr, dlo)
    phi = effective_argument(theta_true, povm_setting + dlo, probe.r, probe.transmission)
    return HomodyneBatch(outcomes=z * np.sqrt(var), povm_setting=float(povm_setting),
                         effective_arg=float(phi))


def sample_heterodyne(probe: SqueezedProbe, theta_true, n, rng) -> HeterodyneBatch:
    """Draw ``n`` complex heterodyne outcomes (exact rotated bivariate Gaussian)."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    gen = as_generator(rng)
    z = gen.standard_normal((n, 2))
    dr = probe.sigma_r * gen.standard_normal(n) if probe.sigma_r > 0 else 0.0
    return HeterodyneBatch(outcomes=heterodyne_from_normals(z, probe, theta_true, dr))


def write_outcome_dump(path, records):
    """Write ``(run, step, outcomes)`` records as a raw-outcome CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(OUTCOME_COLUMNS)
        for run, step, values in records:
            values = np.asarray(values)
            for i, v in enumerate(values):
                writer.writerow([run, step, i, repr(float(np.real(v))), repr(float(np.imag(v)))])

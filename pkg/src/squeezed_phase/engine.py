"""Adaptive phase-estimation strategies and Monte Carlo campaigns.

Runs are simulated in vectorized blocks: every run owns an :class:`RngStream`
keyed by ``(cell, run)`` and draws its whole noise tape up front, so a run's
outcomes do not depend on which block or worker processes it.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimation import (
    LOG_2PI,
    EstimateResult,
    closed_form_angle,
    estimate_from_angle,
    heterodyne_angle,
    heterodyne_term,
    periodic_grid,
    refine_grid_max,
    truncated_mean_sq,
    variance_bounds,
)
from .gaussian import HALF_PI, SqueezedProbe, wrap_phase
from .measurements import RngStream, heterodyne_from_normals, homodyne_variance
from .stats import EstimateBatch

KINDS = ("aqse_homodyne", "chh", "nonadaptive_homodyne", "two_step")
SCOPES = ("joint", "latest")


@dataclass(frozen=True)
class StrategyConfig:
    """Full definition of one estimation strategy.

    ``nu`` defaults to ``N // m``; for the equal-split kinds ``N`` must equal
    ``nu * m``. The two-step kind splits ``N`` by ``first_step_fraction``.
    """

    kind: str
    N: int
    m: int
    probe: SqueezedProbe
    nu: int | None = None
    first_step_fraction: float | None = None
    mle_scope: str = "joint"
    root_seed: int = 0
    grid_points: int = 720

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.mle_scope not in SCOPES:
            raise ValueError(f"mle_scope must be one of {SCOPES}, got {self.mle_scope!r}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.probe.r <= 0:
            raise ValueError("strategies need r > 0")
        if self.probe.transmission == 0:
            raise ValueError("transmission 0 leaves no phase information")
        if self.kind in ("aqse_homodyne", "chh"):
            if self.m < 2:
                raise ValueError(f"m must be >= 2 for {self.kind}, got {self.m}")
            nu = self.N // self.m if self.nu is None else self.nu
            if nu * self.m != self.N:
                raise ValueError(f"N ({self.N}) must equal nu * m ({nu} * {self.m})")
            object.__setattr__(self, "nu", nu)
        elif self.kind == "nonadaptive_homodyne":
            if self.m != 1:
                raise ValueError("nonadaptive_homodyne uses a single step (m = 1)")
            object.__setattr__(self, "nu", self.N)
        else:
            if self.m != 2:
                raise ValueError("two_step uses m = 2")
            f = self.first_step_fraction
            if f is None or not 0 < f < 1:
                raise ValueError("two_step needs 0 < first_step_fraction < 1")
            if not 1 <= math.floor(f * self.N) < self.N:
                raise ValueError("first_step_fraction leaves an empty step")
        if self.kind != "two_step" and self.first_step_fraction is not None:
            raise ValueError("first_step_fraction only applies to two_step")

    @property
    def period(self) -> float:
        return math.pi if self.kind == "chh" else HALF_PI

    def step_sizes(self) -> list[int]:
        if self.kind == "two_step":
            n1 = math.floor(self.first_step_fraction * self.N)
            return [n1, self.N - n1]
        return [self.nu] * self.m

    def step_kinds(self) -> list[str]:
        kinds = ["homodyne"] * self.m
        if self.kind == "chh":
            kinds[0] = "heterodyne"
        return kinds

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probe"] = asdict(self.probe)
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class StepRecord:
    kind: str
    setting: float
    n: int
    mean_sq: float
    discarded: int
    stationary: bool
    estimate: float
    fallback: bool = False


@dataclass
class AdaptiveTrace:
    theta_true: float
    steps: list[StepRecord]
    final: EstimateResult
    outcomes: list | None = None


@dataclass
class _Block:
    """Per-run arrays of one simulated block, shape ``(runs, steps)``."""

    settings: np.ndarray
    estimates: np.ndarray
    mean_sq: np.ndarray
    discarded: np.ndarray
    stationary: np.ndarray
    fallback: np.ndarray
    final_loglik: np.ndarray
    outcomes: list | None = None

    @property
    def final(self):
        return self.estimates[:, -1]


def _draw_tapes(config: StrategyConfig, streams):
    probe = config.probe
    sizes, kinds = config.step_sizes(), config.step_kinds()
    n_het = sum(s for s, k in zip(sizes, kinds) if k == "heterodyne")
    n_hom = config.N - n_het
    runs = len(streams)
    u = np.empty(runs)
    z_het = np.empty((runs, n_het, 2))
    z_hom = np.empty((runs, n_hom))
    dr = np.zeros((runs, config.N)) if probe.sigma_r > 0 else None
    dlo = np.zeros((runs, config.m)) if probe.sigma_lo > 0 else None
    for i, stream in enumerate(streams):
        g = stream.generator()
        u[i] = g.random()
        if n_het:
            z_het[i] = g.standard_normal((n_het, 2))
        z_hom[i] = g.standard_normal(n_hom)
        if dr is not None:
            dr[i] = probe.sigma_r * g.standard_normal(config.N)
        if dlo is not None:
            dlo[i] = probe.sigma_lo * g.standard_normal(config.m)
    return u, z_het, z_hom, dr, dlo


def _hom_loglik(theta, n, sumsq, setting, r, t, theta_opt):
    # inlined homodyne_term without argument checks; hot loop of the engine
    phi = theta + theta_opt - setting
    phi = phi - HALF_PI * np.floor(phi / HALF_PI)
    c, s = np.cos(phi), np.sin(phi)
    v = t * (math.exp(-2 * r) * c * c + math.exp(2 * r) * s * s) + (1 - t)
    return -0.5 * n * (LOG_2PI + np.log(v)) - sumsq / (2 * v)


class _JointLoglik:
    """Accumulated log-likelihood terms of a block, evaluated row-wise."""

    def __init__(self, runs, steps, r, transmission, theta_opt):
        self.r, self.t, self.theta_opt = r, transmission, theta_opt
        self.het = None
        self.k = 0
        self.n = np.zeros(steps)
        self.sumsq = np.zeros((runs, steps))
        self.setting = np.zeros((runs, steps))

    def add_heterodyne(self, n, sum_abs2, sum_sq):
        self.het = (n, sum_abs2, sum_sq)

    def add_homodyne(self, n, sumsq, setting):
        self.n[self.k] = n
        self.sumsq[:, self.k] = sumsq
        self.setting[:, self.k] = setting
        self.k += 1

    def het_values(self, theta):
        n, a2, s2 = self.het
        return heterodyne_term(theta, n, a2, s2, self.r, self.t)

    def homodyne_values(self, theta, k):
        return _hom_loglik(theta, self.n[k], self.sumsq[:, k][:, None], self.setting[:, k][:, None],
                           self.r, self.t, self.theta_opt)

    def __call__(self, theta, latest_only=False):
        theta = np.asarray(theta)
        lo = self.k - 1 if latest_only else 0
        terms = _hom_loglik(theta[:, None], self.n[lo:self.k], self.sumsq[:, lo:self.k],
                            self.setting[:, lo:self.k], self.r, self.t, self.theta_opt)
        total = terms.sum(axis=1)
        if self.het is not None:
            total = total + self.het_values(theta)
        return total


def simulate_block(config: StrategyConfig, theta_true: float, streams, keep_outcomes=False) -> _Block:
    """Simulate one vectorized block of runs, one per stream."""
    probe = config.probe
    r, t = probe.r, probe.transmission
    period = config.period
    sizes, kinds = config.step_sizes(), config.step_kinds()
    runs, m = len(streams), len(sizes)
    u, z_het, z_hom, dr, dlo = _draw_tapes(config, streams)

    settings = np.full((runs, m), np.nan)
    estimates = np.empty((runs, m))
    mean_sq = np.empty((runs, m))
    discarded = np.zeros((runs, m), dtype=int)
    stationary = np.ones((runs, m), dtype=bool)
    fallback = np.zeros((runs, m), dtype=bool)
    final_ll = np.full(runs, np.nan)
    outcomes = [] if keep_outcomes else None

    grid = periodic_grid(0.0, period, config.grid_points)
    grid_all = np.zeros((runs, grid.size))
    grid_het = None
    loglik = _JointLoglik(runs, sum(k == "homodyne" for k in kinds), r, t, probe.optimal_phase())

    if config.kind == "aqse_homodyne":
        setting = u * HALF_PI
    elif config.kind == "chh":
        setting = None
    else:
        setting = np.full(runs, probe.optimal_phase())

    hom_offset = 0
    probe_offset = 0
    for i, (n, kind) in enumerate(zip(sizes, kinds)):
        draw_r = dr[:, probe_offset:probe_offset + n] if dr is not None else 0.0
        probe_offset += n
        if kind == "heterodyne":
            alpha = heterodyne_from_normals(z_het, probe, theta_true, draw_r)
            a2 = np.sum(alpha.real ** 2 + alpha.imag ** 2, axis=1)
            s2 = np.sum(alpha * alpha, axis=1)
            flat = s2 == 0
            est = np.where(flat, u * math.pi, heterodyne_angle(s2))
            fallback[:, i] = flat
            mean_sq[:, i] = a2 / n
            loglik.add_heterodyne(n, a2, s2)
            grid_het = heterodyne_term(grid[None, :], n, a2[:, None], s2[:, None], r, t)
            grid_all += grid_het
            final_ll = heterodyne_term(est, n, a2, s2, r, t)
            if keep_outcomes:
                outcomes.append((i, alpha))
        else:
            settings[:, i] = setting
            jitter = dlo[:, i][:, None] if dlo is not None else 0.0
            var = homodyne_variance(probe, theta_true, setting[:, None], draw_r, jitter)
            x = z_hom[:, hom_offset:hom_offset + n] * np.sqrt(var)
            hom_offset += n
            sumsq = np.sum(x * x, axis=1)
            mean_sq[:, i] = sumsq / n
            first = loglik.k == 0 and loglik.het is None
            loglik.add_homodyne(n, sumsq, setting)
            grid_new = loglik.homodyne_values(grid[None, :], loglik.k - 1)
            grid_all += grid_new
            if keep_outcomes:
                outcomes.append((i, x))
            if first:
                # the modified (truncated) estimator is used on the first batch only
                _, hi = variance_bounds(r, t)
                msq, disc = truncated_mean_sq(-np.sort(-(x * x), axis=1), hi)
                angle, stat = closed_form_angle(np.where(np.isinf(msq), hi, msq), r, t)
                stat = stat & (disc < n)
                est = estimate_from_angle(angle, r, setting, t)
                discarded[:, i] = disc
                stationary[:, i] = stat
                final_ll = loglik(est)
            elif config.mle_scope == "latest" and config.kind != "chh":
                angle, stat = closed_form_angle(sumsq / n, r, t)
                est = estimate_from_angle(angle, r, setting, t)
                stationary[:, i] = stat
                final_ll = loglik(est, latest_only=True)
            else:
                latest = config.mle_scope == "latest"
                if latest:
                    values = grid_het + grid_new
                    fun = lambda th: loglik(th, latest_only=True)  # noqa: E731
                else:
                    values, fun = grid_all, loglik
                with np.errstate(invalid="ignore"):
                    est, fx, interior = refine_grid_max(fun, grid, values)
                bad = ~np.isfinite(fx)
                est = np.where(bad, setting, est)
                fallback[:, i] = bad
                stationary[:, i] = interior & ~bad
                final_ll = fx
        est = wrap_phase(est, period)
        estimates[:, i] = est
        setting = est
    return _Block(settings, estimates, mean_sq, discarded, stationary, fallback, final_ll, outcomes)


def _trace_from_block(block: _Block, config: StrategyConfig, theta_true: float, row=0) -> AdaptiveTrace:
    steps = [
        StepRecord(kind=k, setting=float(block.settings[row, i]), n=n,
                   mean_sq=float(block.mean_sq[row, i]), discarded=int(block.discarded[row, i]),
                   stationary=bool(block.stationary[row, i]), estimate=float(block.estimates[row, i]),
                   fallback=bool(block.fallback[row, i]))
        for i, (n, k) in enumerate(zip(config.step_sizes(), config.step_kinds()))
    ]
    last = steps[-1]
    final = EstimateResult(last.estimate, last.stationary, sum(s.discarded for s in steps),
                           float(block.final_loglik[row]), config.period)
    outcomes = None
    if block.outcomes is not None:
        outcomes = [(i, np.array(v[row])) for i, v in block.outcomes]
    return AdaptiveTrace(theta_true=float(theta_true), steps=steps, final=final, outcomes=outcomes)


def _as_stream(config, rng):
    if rng is None:
        return RngStream(config.root_seed, (0, 0))
    if isinstance(rng, RngStream):
        return rng
    return RngStream(int(rng), ())


def _run_single(config, theta_true, rng, kind, keep_outcomes=False) -> AdaptiveTrace:
    if config.kind != kind:
        raise ValueError(f"config kind is {config.kind!r}, expected {kind!r}")
    block = simulate_block(config, theta_true, [_as_stream(config, rng)], keep_outcomes)
    return _trace_from_block(block, config, theta_true)


def run_aqse_homodyne(config, theta_true, rng=None, keep_outcomes=False) -> AdaptiveTrace:
    """Multi-step adaptive homodyne strategy over ``[0, pi/2)``.

    The first setting is uniform on ``[0, pi/2)``; each later setting is the
    previous step's estimate.
    """
    return _run_single(config, theta_true, rng, "aqse_homodyne", keep_outcomes)


def run_chh(config, theta_true, rng=None, keep_outcomes=False) -> AdaptiveTrace:
    """Heterodyne first step, then adaptive homodyne, over ``[0, pi)``."""
    return _run_single(config, theta_true, rng, "chh", keep_outcomes)


def run_nonadaptive_homodyne(config, theta_true, rng=None, keep_outcomes=False) -> AdaptiveTrace:
    """All ``N`` copies measured with the unrotated homodyne POVM."""
    return _run_single(config, theta_true, rng, "nonadaptive_homodyne", keep_outcomes)


def run_two_step(config, theta_true, rng=None, keep_outcomes=False) -> AdaptiveTrace:
    """Two steps: a fraction of the copies at the optimal setting, the rest at its estimate."""
    return _run_single(config, theta_true, rng, "two_step", keep_outcomes)


RUNNERS = {
    "aqse_homodyne": run_aqse_homodyne,
    "chh": run_chh,
    "nonadaptive_homodyne": run_nonadaptive_homodyne,
    "two_step": run_two_step,
}


def run_strategy(config, theta_true, rng=None, keep_outcomes=False) -> AdaptiveTrace:
    return RUNNERS[config.kind](config, theta_true, rng, keep_outcomes)


# -- campaigns ----------------------------------------------------------------

@dataclass
class CampaignResult:
    config: StrategyConfig
    theta_grid: np.ndarray
    runs_per_point: int
    batches: list[EstimateBatch]
    failures: list = field(default_factory=list)
    traces: list | None = None

    def cell(self, index):
        """Batches belonging to grid point ``index`` in batch order."""
        per = len(self.batches) // len(self.theta_grid)
        return self.batches[index * per:(index + 1) * per]


def _run_unit(args):
    config, cell, theta, batch, start, stop, keep_traces = args
    streams = [RngStream(config.root_seed, (cell, run)) for run in range(start, stop)]
    failures = []
    try:
        block = simulate_block(config, theta, streams)
        finals = block.final.copy()
        traces = [_trace_from_block(block, config, theta, j) for j in range(len(streams))] if keep_traces else None
    except Exception:
        # isolate the failing runs and keep the rest of the unit
        finals, traces = [], [] if keep_traces else None
        for run, stream in zip(range(start, stop), streams):
            try:
                b = simulate_block(config, theta, [stream])
                finals.append(b.final[0])
                if keep_traces:
                    traces.append(_trace_from_block(b, config, theta))
            except Exception as exc:  # noqa: BLE001
                failures.append({"cell": cell, "run": run, "error": repr(exc)})
        finals = np.array(finals)
    return cell, batch, finals, failures, traces


def run_campaign(config: StrategyConfig, theta_grid, runs_per_point, batches=1, workers=1,
                 keep_traces=False) -> CampaignResult:
    """Run ``runs_per_point`` independent runs at every grid phase.

    Runs are split into ``batches`` equal groups, each reported as its own
    :class:`EstimateBatch`. Output is identical for any ``workers``.
    """
    if runs_per_point < 1:
        raise ValueError("runs_per_point must be >= 1")
    if batches < 1 or runs_per_point % batches:
        raise ValueError("runs_per_point must be a positive multiple of batches")
    theta_grid = np.asarray(theta_grid, dtype=float)
    per = runs_per_point // batches
    units = [(config, c, float(theta), b, b * per, (b + 1) * per, keep_traces)
             for c, theta in enumerate(theta_grid) for b in range(batches)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_unit, units))
    else:
        results = [_run_unit(u) for u in units]

    fp = config.fingerprint()
    out, failures, traces = [], [], [] if keep_traces else None
    for cell, batch, finals, fails, tr in results:
        failures.extend(fails)
        if keep_traces:
            traces.extend((cell, batch, t) for t in tr)
        if len(finals) == 0:
            continue
        out.append(EstimateBatch(theta_true=float(theta_grid[cell]), estimates=finals,
                                 period=config.period, batch=batch, fingerprint=fp, failures=fails))
    return CampaignResult(config, theta_grid, runs_per_point, out, failures, traces)


def interior_grid(points, period):
    """``points`` uniformly spaced cell-centre phases in ``(0, period)``."""
    return (np.arange(points) + 0.5) * period / points

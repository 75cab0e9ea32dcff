"""Campaign orchestration and figure-data tables.

Every function returns plain rows (lists of dicts keyed by the documented
column names) so the CLI only has to write them.
"""
from __future__ import annotations

import csv
from dataclasses import replace

import numpy as np

from .config import CampaignSpec
from .engine import StrategyConfig, run_campaign
from .fisher import (
    FISHER_COLUMNS,
    conditional_fisher_lo_noise,
    conditional_fisher_state_prep,
    fisher_heterodyne,
    fisher_homodyne,
    fisher_homodyne_lossy_max,
    fisher_report,
    qfi_lossy,
    qfi_squeezed_vacuum,
)
from .gaussian import SqueezedProbe, mean_photon_number, optimal_phase
from .measurements import RngStream
from .stats import (
    anderson_darling_normal,
    averaged_nonstationary_prob,
    fisher_combine,
    holevo_variance,
    moment_report,
    nonstationary_prob,
    signed_error,
    stationary_point_prob,
)

SUMMARY_COLUMNS = ["theta", "kind", "m", "nu", "r", "T", "holevo_var", "normalized_var", "batch_std", "runs"]
BOUNDS_COLUMNS = ["T", "N", "qcrb", "lossy_qcrb", "lossy_homodyne_crb", "het_limit", "snl"]
TRACE_COLUMNS = ["theta", "batch", "run", "step", "kind", "setting", "n", "mean_sq", "discarded",
                 "stationary", "estimate", "fallback"]
FAILURE_COLUMNS = ["m", "T", "cell", "run", "error"]
LOSS_COLUMNS = ["r", "T", "qfi", "qfi_lossy", "cfi_homodyne_lossy_max", "qfi_lossy_ratio", "cfi_lossy_ratio"]
LO_NOISE_COLUMNS = ["r", "sigma_lo", "cfi_conditional", "qfi", "ratio"]
STATE_PREP_COLUMNS = ["r", "sigma_r", "theta", "cfi_conditional", "qfi", "ratio"]
STATIONARY_COLUMNS = ["r", "nu", "theta", "p_stationary", "p_nonstationary"]
AVERAGED_COLUMNS = ["r", "nu", "p_nonstationary_avg"]
MOMENT_COLUMNS = ["kind", "m", "nu", "N", "r", "theta", "bias", "holevo_var", "normalized_var",
                  "skewness", "excess_kurtosis", "samples"]
NORMALITY_COLUMNS = ["repetition", "draw", "theta0", "null_variance", "ad_statistic", "p_value",
                     "combined_p", "reject_at_0.01"]

# stream keys reserved for draws outside the per-run streams
_DIAGNOSE_KEY = 1_000_003


def fmt(value):
    """Full round-trip text for CSV cells."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in columns])


def reference_qfi(probe: SqueezedProbe) -> float:
    """QFI used for normalization: the lossy one when ``T < 1``."""
    return float(qfi_lossy(probe.r, probe.transmission))


# -- simulate -----------------------------------------------------------------

def simulate(spec: CampaignSpec, workers=None, keep_traces=False):
    """Run every strategy of the campaign; returns ``(summary, bounds, traces, failures, results)``."""
    workers = spec.workers if workers is None else workers
    summary, bounds, traces, failures, results = [], [], [], [], []
    for strategy in spec.strategies():
        res = run_campaign(strategy, spec.theta_grid, spec.runs, spec.batches, workers, keep_traces)
        results.append(res)
        summary.extend(summary_rows(res))
        bounds.append(bounds_row(strategy))
        for f in res.failures:
            failures.append({"m": strategy.m, "T": strategy.probe.transmission, **f})
        if keep_traces:
            per = spec.runs // spec.batches
            seen = {}
            for cell, batch, tr in res.traces:
                j = seen.get((cell, batch), 0)
                seen[(cell, batch)] = j + 1
                traces.extend(trace_rows(tr, batch, batch * per + j))
    return summary, bounds, traces, failures, results


def summary_rows(result):
    config = result.config
    probe = config.probe
    fq = reference_qfi(probe)
    rows = []
    for i, theta in enumerate(result.theta_grid):
        batches = result.cell(i)
        values = np.array([holevo_variance(b) for b in batches])
        hv = float(np.mean(values))
        rows.append({
            "theta": float(theta), "kind": config.kind, "m": config.m, "nu": config.nu or 0,
            "r": probe.r, "T": probe.transmission, "holevo_var": hv,
            "normalized_var": hv * config.N * fq,
            "batch_std": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
            "runs": int(sum(b.estimates.size for b in batches)),
        })
    return rows


def bounds_row(config: StrategyConfig):
    r, t, n = config.probe.r, config.probe.transmission, config.N
    return {"T": t, "N": n, "qcrb": 1 / (n * qfi_squeezed_vacuum(r)), "lossy_qcrb": 1 / (n * qfi_lossy(r, t)),
            "lossy_homodyne_crb": 1 / (n * fisher_homodyne_lossy_max(r, t)),
            "het_limit": 1 / (n * fisher_heterodyne(r)), "snl": 1 / (4 * n * mean_photon_number(r))}


def trace_rows(trace, batch, run):
    rows = []
    for i, s in enumerate(trace.steps):
        rows.append({"theta": trace.theta_true, "batch": batch, "run": run,
                     "step": i, "kind": s.kind, "setting": s.setting, "n": s.n, "mean_sq": s.mean_sq,
                     "discarded": s.discarded, "stationary": s.stationary, "estimate": s.estimate,
                     "fallback": s.fallback})
    return rows


# -- fisher -------------------------------------------------------------------

def fisher_columns():
    return FISHER_COLUMNS + ["cfi_ratio"]


def fisher_rows(probe: SqueezedProbe, theta_grid, n=1):
    """Report rows plus ``cfi_ratio`` = homodyne information over the (lossy) QFI."""
    rows = list(fisher_report(probe, theta_grid, n).rows())
    for row in rows:
        row["cfi_ratio"] = row["cfi_homodyne"] / row["qfi"]
    return rows


def loss_sweep_rows(r_values, t_values):
    rows = []
    for r in r_values:
        fq = float(qfi_squeezed_vacuum(r))
        for t in t_values:
            ql, xl = float(qfi_lossy(r, t)), float(fisher_homodyne_lossy_max(r, t))
            rows.append({"r": r, "T": t, "qfi": fq, "qfi_lossy": ql, "cfi_homodyne_lossy_max": xl,
                         "qfi_lossy_ratio": ql / fq, "cfi_lossy_ratio": xl / fq})
    return rows


def lo_noise_rows(r, sigmas):
    fq = float(qfi_squeezed_vacuum(r))
    rows = []
    for s in sigmas:
        c = conditional_fisher_lo_noise(r, s)
        rows.append({"r": r, "sigma_lo": s, "cfi_conditional": c, "qfi": fq, "ratio": c / fq})
    return rows


def state_prep_rows(r, sigma_r, theta_grid):
    fq = float(qfi_squeezed_vacuum(r))
    rows = []
    for theta in theta_grid:
        c = conditional_fisher_state_prep(r, sigma_r, float(theta))
        rows.append({"r": r, "sigma_r": sigma_r, "theta": float(theta), "cfi_conditional": c, "qfi": fq,
                     "ratio": c / fq})
    return rows


# -- probabilities ------------------------------------------------------------

def stationary_rows(r_values, nu_values, theta_grid):
    rows = []
    for r in r_values:
        for nu in nu_values:
            p = np.atleast_1d(stationary_point_prob(theta_grid, r, nu))
            q = np.atleast_1d(nonstationary_prob(theta_grid, r, nu))
            rows.extend({"r": r, "nu": nu, "theta": float(t), "p_stationary": float(a), "p_nonstationary": float(b)}
                        for t, a, b in zip(theta_grid, p, q))
    return rows


def averaged_rows(r_values, nu_values):
    return [{"r": r, "nu": nu, "p_nonstationary_avg": averaged_nonstationary_prob(r, nu)}
            for r in r_values for nu in nu_values]


# -- diagnose -----------------------------------------------------------------

def moment_rows(spec: CampaignSpec, workers=None):
    """Bias, variance and shape of the final estimates for every strategy of the spec."""
    workers = spec.workers if workers is None else workers
    rows = []
    for strategy in spec.strategies():
        res = run_campaign(strategy, spec.theta_grid, spec.runs, 1, workers)
        fq = reference_qfi(strategy.probe)
        for batch in res.batches:
            mr = moment_report(batch)
            rows.append({"kind": strategy.kind, "m": strategy.m, "nu": strategy.nu or 0, "N": strategy.N,
                         "r": strategy.probe.r, "theta": batch.theta_true, "bias": mr.bias,
                         "holevo_var": mr.holevo_variance, "normalized_var": mr.holevo_variance * strategy.N * fq,
                         "skewness": mr.skewness, "excess_kurtosis": mr.excess_kurtosis,
                         "samples": batch.estimates.size})
    return rows


def normality_protocol(strategy: StrategyConfig, samples, thetas, repetitions=1, workers=1, alpha=0.01):
    """Anderson-Darling normality protocol with Fisher's combination.

    For each repetition, ``thetas`` true phases are drawn uniformly over the
    strategy's period. At each one, ``samples`` final estimates are tested
    against ``Normal(theta0, 1 / (N F_X(theta_opt)))``. The per-phase
    p-values are then combined.
    """
    probe = strategy.probe
    sigma2 = 1.0 / (strategy.N * float(fisher_homodyne(probe.r, optimal_phase(probe.r))))
    rows = []
    for rep in range(repetitions):
        g = RngStream(strategy.root_seed, (_DIAGNOSE_KEY, rep)).generator()
        theta0 = g.uniform(0.0, strategy.period, thetas)
        # each repetition gets its own run streams
        cfg = replace(strategy, root_seed=int(g.integers(2 ** 63)))
        res = run_campaign(cfg, theta0, samples, 1, workers)
        rep_rows = []
        for j, batch in enumerate(res.batches):
            x = batch.theta_true + signed_error(batch.estimates, batch.theta_true, batch.period)
            a2, p = anderson_darling_normal(x, batch.theta_true, sigma2)
            rep_rows.append({"repetition": rep, "draw": j, "theta0": batch.theta_true, "null_variance": sigma2,
                             "ad_statistic": a2, "p_value": p})
        combined = fisher_combine([max(r["p_value"], 1e-300) for r in rep_rows])
        for r in rep_rows:
            r["combined_p"] = combined
            r["reject_at_0.01"] = combined < alpha
        rows.extend(rep_rows)
    return rows


def diagnose_strategy(spec: CampaignSpec) -> StrategyConfig:
    """Strategy for the normality protocol: the campaign strategy at the diagnose ``m`` and ``nu``."""
    d = spec.diagnose
    return replace(spec.strategy, m=d.m, nu=d.nu, N=d.m * d.nu)


__all__ = [
    "SUMMARY_COLUMNS", "averaged_rows", "bounds_row", "diagnose_strategy", "fisher_columns", "fisher_rows",
    "lo_noise_rows", "loss_sweep_rows", "moment_rows", "normality_protocol", "simulate", "state_prep_rows",
    "stationary_rows", "summary_rows", "write_csv",
]

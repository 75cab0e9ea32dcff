"""Campaign configuration files (TOML).

A config has three tables::

    [strategy]                 # kind, N, m, optional nu / first_step_fraction,
    kind = "aqse_homodyne"     # mle_scope, root_seed, grid_points
    N = 3705
    m = 15

    [probe]                    # r, transmission, sigma_r, sigma_lo
    r = 1.01

    [campaign]                 # theta_points or theta_grid, runs, batches,
    theta_points = 32          # outputs, workers
    runs = 10000

and an optional ``[sweep]`` table with lists for ``m`` and/or
``transmission``. Sweeping ``m`` keeps ``N`` as a budget: each value uses
``nu = N // m`` and ``N = nu * m``. An optional ``[diagnose]`` table
configures the normality protocol. Unknown keys are errors.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import tomli
import tomli_w

from .engine import StrategyConfig, interior_grid
from .gaussian import SqueezedProbe

OUTPUTS = ("summary", "traces", "fisher-report", "moments")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field(s)."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


@dataclass
class DiagnoseSpec:
    m: int = 20
    nu: int = 50
    samples: int = 1000
    thetas: int = 5
    repetitions: int = 1


@dataclass
class CampaignSpec:
    strategy: StrategyConfig
    theta_grid: list
    runs: int
    batches: int = 5
    outputs: list = field(default_factory=lambda: ["summary"])
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    sweep: dict = field(default_factory=dict)
    diagnose: DiagnoseSpec = field(default_factory=DiagnoseSpec)
    theta_points: int | None = None

    def strategies(self) -> list[StrategyConfig]:
        """One strategy per point of the sweep (cartesian over m and transmission)."""
        ms = self.sweep.get("m", [self.strategy.m])
        ts = self.sweep.get("transmission", [self.strategy.probe.transmission])
        out = []
        for t in ts:
            for m in ms:
                base = self.strategy
                probe = replace(base.probe, transmission=float(t))
                if "m" in self.sweep:
                    nu = base.N // m
                    out.append(replace(base, m=int(m), nu=nu, N=nu * int(m), probe=probe))
                else:
                    out.append(replace(base, probe=probe))
        return out


_STRATEGY_KEYS = {"kind", "N", "m", "nu", "first_step_fraction", "mle_scope", "root_seed", "grid_points"}
_PROBE_KEYS = {"r", "transmission", "sigma_r", "sigma_lo"}
_CAMPAIGN_KEYS = {"theta_points", "theta_grid", "runs", "batches", "outputs", "workers"}
_SWEEP_KEYS = {"m", "transmission"}
_DIAGNOSE_KEYS = {"m", "nu", "samples", "thetas", "repetitions"}
_TABLES = {"strategy": _STRATEGY_KEYS, "probe": _PROBE_KEYS, "campaign": _CAMPAIGN_KEYS,
           "sweep": _SWEEP_KEYS, "diagnose": _DIAGNOSE_KEYS}


def _check_keys(doc):
    for key, value in doc.items():
        if key not in _TABLES:
            raise ConfigError("unknown table", key)
        if not isinstance(value, dict):
            raise ConfigError("expected a table", key)
        for sub in value:
            if sub not in _TABLES[key]:
                raise ConfigError("unknown key", f"{key}.{sub}")
    for required in ("strategy", "probe"):
        if required not in doc:
            raise ConfigError("missing table", required)


def _int(table, key, path, default=None):
    if key not in table:
        if default is None:
            raise ConfigError("missing required key", path)
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return value


def from_dict(doc: dict) -> CampaignSpec:
    """Validate a parsed config document and build the :class:`CampaignSpec`."""
    _check_keys(doc)
    st, pr = doc["strategy"], doc["probe"]
    camp = doc.get("campaign", {})
    if "kind" not in st:
        raise ConfigError("missing required key", "strategy.kind")
    if "r" not in pr:
        raise ConfigError("missing required key", "probe.r")
    try:
        probe = SqueezedProbe(r=float(pr["r"]), transmission=float(pr.get("transmission", 1.0)),
                              sigma_r=float(pr.get("sigma_r", 0.0)), sigma_lo=float(pr.get("sigma_lo", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "probe") from None

    kind = st["kind"]
    n_total = _int(st, "N", "strategy.N")
    m = _int(st, "m", "strategy.m", 1 if kind == "nonadaptive_homodyne" else 2 if kind == "two_step" else None)
    nu = _int(st, "nu", "strategy.nu", -1)
    nu = None if nu == -1 else nu
    if kind in ("aqse_homodyne", "chh") and "m" not in doc.get("sweep", {}):
        expect = nu if nu is not None else n_total // m
        if expect * m != n_total:
            raise ConfigError(f"N ({n_total}) must equal nu * m ({expect} * {m})", "strategy.N, strategy.m")
    try:
        strategy = StrategyConfig(
            kind=kind, N=n_total, m=m, probe=probe, nu=nu,
            first_step_fraction=st.get("first_step_fraction"),
            mle_scope=st.get("mle_scope", "joint"),
            root_seed=_int(st, "root_seed", "strategy.root_seed", 0),
            grid_points=_int(st, "grid_points", "strategy.grid_points", 720))
    except ValueError as exc:
        raise ConfigError(str(exc), "strategy") from None

    period = strategy.period
    if "theta_grid" in camp and "theta_points" in camp:
        raise ConfigError("give either theta_grid or theta_points", "campaign.theta_grid, campaign.theta_points")
    points = None
    if "theta_grid" in camp:
        grid = [float(x) for x in camp["theta_grid"]]
        bad = [x for x in grid if not 0 <= x < period]
        if bad or not grid:
            raise ConfigError(f"grid points must lie in [0, {period:.6g}), got {bad or grid}", "campaign.theta_grid")
    else:
        points = _int(camp, "theta_points", "campaign.theta_points", 32)
        if points < 1:
            raise ConfigError("must be >= 1", "campaign.theta_points")
        grid = [float(x) for x in interior_grid(points, period)]

    runs = _int(camp, "runs", "campaign.runs", 1000)
    batches = _int(camp, "batches", "campaign.batches", 5)
    if runs < 1 or batches < 1 or runs % batches:
        raise ConfigError(f"runs ({runs}) must be a positive multiple of batches ({batches})",
                          "campaign.runs, campaign.batches")
    outputs = list(camp.get("outputs", ["summary"]))
    for o in outputs:
        if o not in OUTPUTS:
            raise ConfigError(f"unknown output {o!r}; choose from {OUTPUTS}", "campaign.outputs")
    workers = _int(camp, "workers", "campaign.workers", os.cpu_count() or 1)
    if workers < 1:
        raise ConfigError("must be >= 1", "campaign.workers")

    sweep = {}
    for key, values in doc.get("sweep", {}).items():
        if not isinstance(values, list) or not values:
            raise ConfigError("expected a non-empty list", f"sweep.{key}")
        sweep[key] = [int(v) for v in values] if key == "m" else [float(v) for v in values]
    if "m" in sweep:
        for mv in sweep["m"]:
            if mv < 2 or n_total // mv < 1:
                raise ConfigError(f"invalid m {mv} for N = {n_total}", "sweep.m")

    dg = doc.get("diagnose", {})
    diag = DiagnoseSpec(**{k: _int(dg, k, f"diagnose.{k}", getattr(DiagnoseSpec, k)) for k in _DIAGNOSE_KEYS})
    spec = CampaignSpec(strategy=strategy, theta_grid=grid, runs=runs, batches=batches, outputs=outputs,
                        workers=workers, sweep=sweep, diagnose=diag, theta_points=points)
    try:
        spec.strategies()
    except ValueError as exc:
        raise ConfigError(str(exc), "sweep") from None
    return spec


def _line_of(text, path):
    """1-based line of the first ``table.key`` in ``path``, or None."""
    first = path.split(",")[0].strip()
    table, _, key = first.partition(".")
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("["):
            current = stripped.strip("[] ")
            if not key and current == table:
                return no
        elif current == table and key and stripped.split("=")[0].strip() == key:
            return no
    return None


def parse_config(text: str) -> CampaignSpec:
    """Parse and validate a TOML campaign config."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    try:
        return from_dict(doc)
    except ConfigError as exc:
        line = _line_of(text, exc.path) if exc.path else None
        if line is None:
            raise
        raise ConfigError(f"{exc.message} (line {line})", exc.path) from None


def to_dict(spec: CampaignSpec) -> dict:
    s = spec.strategy
    st = {"kind": s.kind, "N": s.N, "m": s.m, "mle_scope": s.mle_scope, "root_seed": s.root_seed,
          "grid_points": s.grid_points}
    if s.kind in ("aqse_homodyne", "chh"):
        st["nu"] = s.nu
    if s.first_step_fraction is not None:
        st["first_step_fraction"] = s.first_step_fraction
    p = s.probe
    doc = {"strategy": st,
           "probe": {"r": p.r, "transmission": p.transmission, "sigma_r": p.sigma_r, "sigma_lo": p.sigma_lo},
           "campaign": {"runs": spec.runs, "batches": spec.batches, "outputs": list(spec.outputs),
                        "workers": spec.workers}}
    if spec.theta_points is not None:
        doc["campaign"]["theta_points"] = spec.theta_points
    else:
        doc["campaign"]["theta_grid"] = list(spec.theta_grid)
    if spec.sweep:
        doc["sweep"] = {k: list(v) for k, v in spec.sweep.items()}
    d = spec.diagnose
    doc["diagnose"] = {"m": d.m, "nu": d.nu, "samples": d.samples, "thetas": d.thetas,
                       "repetitions": d.repetitions}
    return doc


def dump_config(spec: CampaignSpec) -> str:
    """Serialize ``spec`` to TOML; ``parse_config(dump_config(s))`` reproduces ``s``."""
    return tomli_w.dumps(to_dict(spec))


PRESETS = {
    "fig5": """
[strategy]
kind = "aqse_homodyne"
N = 3705
m = 15
[probe]
r = 1.01
[campaign]
theta_points = 32
runs = 10000
batches = 5
[sweep]
m = [3, 5, 9, 15]
""",
    "fig5-baselines": """
[strategy]
kind = "two_step"
N = 3705
m = 2
first_step_fraction = 0.1
[probe]
r = 1.01
[campaign]
theta_points = 32
runs = 10000
batches = 5
""",
    "fig7": """
[strategy]
kind = "chh"
N = 3705
m = 15
[probe]
r = 1.01
[campaign]
theta_points = 32
runs = 10000
batches = 5
""",
    "fig9": """
[strategy]
kind = "chh"
N = 3705
m = 15
[probe]
r = 1.01
[campaign]
theta_points = 32
runs = 10000
batches = 5
[sweep]
transmission = [1.0, 0.99, 0.95]
""",
    "fig11": """
[strategy]
kind = "chh"
N = 3000
m = 20
[probe]
r = 1.0
[campaign]
theta_points = 8
runs = 2000
batches = 5
outputs = ["moments"]
[sweep]
m = [2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30]
[diagnose]
m = 20
nu = 50
samples = 1000
thetas = 5
""",
}


def preset(name: str) -> CampaignSpec:
    """Named figure preset; a ``-small`` suffix divides the run count by 10."""
    small = name.endswith("-small")
    base = name[: -len("-small")] if small else name
    if base not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)} (+ '-small')")
    spec = parse_config(PRESETS[base])
    if small:
        spec.runs //= 10
        spec.diagnose.samples //= 10
        spec.runs -= spec.runs % spec.batches
    return spec


__all__ = ["CampaignSpec", "ConfigError", "DiagnoseSpec", "dump_config", "parse_config", "preset"]

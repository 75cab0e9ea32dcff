"""Command-line interface: ``squeezed-phase {simulate,fisher,probabilities,diagnose}``.

Exit codes: 0 success, 1 user error (bad arguments or config), 2 internal
error or partial output (see ``failures.csv``).
"""
from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import CampaignSpec, ConfigError, parse_config, preset, to_dict
from .gaussian import HALF_PI, SqueezedProbe

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class UserError(Exception):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p):
    p.add_argument("--seed", type=int, help="root seed (overrides the config)")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="output directory (default: .)")
    p.add_argument("--dump-traces", action="store_true", help="also write per-step traces")


def build_parser():
    parser = argparse.ArgumentParser(prog="squeezed-phase", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("simulate", "run a Monte Carlo campaign and write summary.csv"),
                           ("diagnose", "moment diagnostics and the normality protocol")):
        p = sub.add_parser(name, help=helptext)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("config", nargs="?", type=Path, help="TOML campaign config")
        src.add_argument("--preset", help="named preset, e.g. fig5 or fig5-small")
        _common(p)
        if name == "diagnose":
            p.add_argument("--skip-moments", action="store_true", help="do not write moments.csv")
            p.add_argument("--skip-normality", action="store_true", help="do not write normality.csv")

    p = sub.add_parser("fisher", help="Fisher information tables")
    p.add_argument("--r", type=float, default=1.0, help="squeezing strength (default: 1.0)")
    p.add_argument("--T", type=float, default=1.0, dest="transmission", help="transmission (default: 1.0)")
    p.add_argument("--sigma-r", type=float, default=0.0, help="squeezing noise std (default: 0)")
    p.add_argument("--sigma-lo", type=float, default=0.0, help="LO phase noise std (default: 0)")
    p.add_argument("--points", type=int, default=181, help="grid points over [0, pi/2] (default: 181)")
    p.add_argument("--N", type=int, default=1, dest="n", help="copies for the bound columns")
    p.add_argument("--loss-sweep", type=_floats, metavar="R_LIST",
                   help="write loss_sweep.csv for these r values over --t-grid")
    p.add_argument("--t-grid", type=_floats, default=[k / 20 for k in range(1, 21)],
                   help="comma-separated transmissions (default: 0.05, 0.10, ..., 1.0)")
    p.add_argument("--lo-sweep", type=_floats, metavar="SIGMA_LIST", help="write lo_noise.csv")
    p.add_argument("--state-prep", action="store_true", help="write state_prep.csv using --sigma-r")
    _common(p)

    p = sub.add_parser("probabilities", help="non-stationary MLE probabilities")
    p.add_argument("--r", type=_floats, default=[1.0], help="comma-separated r values")
    p.add_argument("--nu", type=_ints, default=[1, 100, 1000, 3705], help="comma-separated nu values")
    p.add_argument("--points", type=int, default=91, help="grid points over [0, pi/2]")
    _common(p)
    return parser


def _load_spec(args) -> CampaignSpec:
    if args.preset:
        spec = preset(args.preset)
    else:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise UserError(f"cannot read config: {exc}") from None
        spec = parse_config(text)
    if args.seed is not None:
        spec.strategy = replace(spec.strategy, root_seed=args.seed)
    if args.workers is not None:
        if args.workers < 1:
            raise UserError("--workers must be >= 1")
        spec.workers = args.workers
    return spec


def _echo_config(spec, out):
    # the worker count is left out so the echo is identical for any parallelism
    doc = to_dict(spec)
    doc["campaign"].pop("workers", None)
    doc["campaign"]["theta_grid"] = list(spec.theta_grid)
    with open(out / "config.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _grid(points, period=HALF_PI):
    if points < 2:
        raise UserError("--points must be >= 2")
    return np.linspace(0.0, period, points)


def cmd_simulate(args):
    spec = _load_spec(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    keep = args.dump_traces or "traces" in spec.outputs
    summary, bounds, traces, failures, results = ex.simulate(spec, keep_traces=keep)
    _echo_config(spec, out)
    ex.write_csv(out / "summary.csv", ex.SUMMARY_COLUMNS, summary)
    ex.write_csv(out / "bounds.csv", ex.BOUNDS_COLUMNS, bounds)
    if keep:
        ex.write_csv(out / "traces.csv", ex.TRACE_COLUMNS, traces)
    if "fisher-report" in spec.outputs:
        probe = spec.strategy.probe
        ex.write_csv(out / "fisher.csv", ex.fisher_columns(),
                     ex.fisher_rows(probe, _grid(181), spec.strategy.N))
    if "moments" in spec.outputs:
        ex.write_csv(out / "moments.csv", ex.MOMENT_COLUMNS, ex.moment_rows(spec))
    return _finish(out, failures)


def _finish(out, failures):
    if failures:
        ex.write_csv(out / "failures.csv", ex.FAILURE_COLUMNS, failures)
        print(f"warning: {len(failures)} runs failed; outputs are partial (see failures.csv)", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_fisher(args):
    out = args.out_dir
    try:
        probe = SqueezedProbe(args.r, args.transmission, args.sigma_r, args.sigma_lo)
    except ValueError as exc:
        raise UserError(str(exc)) from None
    if args.n < 1:
        raise UserError("--N must be >= 1")
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(args.points)
    ex.write_csv(out / "fisher.csv", ex.fisher_columns(), ex.fisher_rows(probe, grid, args.n))
    if args.loss_sweep:
        if any(not 0 < t <= 1 for t in args.t_grid):
            raise UserError("--t-grid values must lie in (0, 1]")
        ex.write_csv(out / "loss_sweep.csv", ex.LOSS_COLUMNS, ex.loss_sweep_rows(args.loss_sweep, args.t_grid))
    if args.lo_sweep:
        if any(s < 0 for s in args.lo_sweep):
            raise UserError("--lo-sweep values must be >= 0")
        ex.write_csv(out / "lo_noise.csv", ex.LO_NOISE_COLUMNS, ex.lo_noise_rows(args.r, args.lo_sweep))
    if args.state_prep:
        ex.write_csv(out / "state_prep.csv", ex.STATE_PREP_COLUMNS,
                     ex.state_prep_rows(args.r, args.sigma_r, grid))
    return EXIT_OK


def cmd_probabilities(args):
    out = args.out_dir
    if any(r <= 0 for r in args.r):
        raise UserError("--r values must be > 0")
    if any(nu < 1 for nu in args.nu):
        raise UserError("--nu values must be >= 1")
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(args.points)
    ex.write_csv(out / "stationary.csv", ex.STATIONARY_COLUMNS, ex.stationary_rows(args.r, args.nu, grid))
    ex.write_csv(out / "averaged.csv", ex.AVERAGED_COLUMNS, ex.averaged_rows(args.r, args.nu))
    return EXIT_OK


def cmd_diagnose(args):
    spec = _load_spec(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(spec, out)
    if not args.skip_moments:
        ex.write_csv(out / "moments.csv", ex.MOMENT_COLUMNS, ex.moment_rows(spec))
    if not args.skip_normality:
        d = spec.diagnose
        try:
            strategy = ex.diagnose_strategy(spec)
        except ValueError as exc:
            raise UserError(f"diagnose: {exc}") from None
        rows = ex.normality_protocol(strategy, d.samples, d.thetas, d.repetitions, spec.workers)
        ex.write_csv(out / "normality.csv", ex.NORMALITY_COLUMNS, rows)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fisher": cmd_fisher, "probabilities": cmd_probabilities,
            "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USER
    try:
        return COMMANDS[args.command](args)
    except (UserError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


__all__ = ["build_parser", "main"]

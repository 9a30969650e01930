"""Command-line interface: ``swent {bounds,simulate,estimate,reproduce,signal-info}``.

Exit codes: 0 success, 1 configuration or usage error, 2 refusal (for
example a failed Lotka-Volterra bound check with ``S = auto``), 3 reproduced
table deviates by more than 0.01, 4 trajectory divergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import LOWER_TAGS, BoundReport, _jsonable, all_bounds
from .config import ConfigError, RunConfig, _floats, load_config
from .dynamics import CompactBox, integrate
from .errors import DivergenceError, RefusalError, SwentError
from .estimate import DEFAULT_SEED, entropy_estimate
from .presets import TABLES, TOLERANCE, reproduce_table
from .switching import asymptotic_rates

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_REFUSAL, EXIT_DEVIATION, EXIT_DIVERGENCE = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="") as fh:
        fh.write(text)


def _seed(args, cfg: RunConfig | None) -> int:
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get("SWENT_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"SWENT_SEED must be an integer, got {env!r}") from None
    return cfg.seed(DEFAULT_SEED) if cfg is not None else DEFAULT_SEED


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("this command needs --config PATH")
    return load_config(args.config)


# -- commands ------------------------------------------------------------

def _bounds_csv(report: BoundReport) -> str:
    rows = [[tag, _fmt(v), "lower" if tag in LOWER_TAGS else "upper"]
            for tag, v in report.values.items()]
    return _csv_text(["tag", "value", "kind"], rows)


def cmd_bounds(args) -> int:
    cfg = _load(args)
    system = cfg.build_system()
    S = cfg.build_S(system)
    sig = cfg.build_signal(args.horizon)
    b = cfg.bounds
    kw = {"tail_fraction": float(b.get("tail_fraction", 0.5)),
          "resolution": int(b.get("resolution", 41)),
          "use_declared": bool(b.get("use_declared", True))}
    norm = args.norm or cfg.norm.value
    report = all_bounds(system, sig, S, norm, **kw)
    text = {"json": report.to_json() + "\n", "table": report.to_table() + "\n",
            "csv": _bounds_csv(report)}
    _write(args.out, "bounds.json", text["json"])
    _write(args.out, "bounds.txt", text["table"])
    if args.format == "csv":
        _write(args.out, "bounds.csv", text["csv"])
    sys.stdout.write(text[args.format])
    return EXIT_OK


def _parse_x0(items) -> list[list[float]]:
    out = []
    for item in items:
        try:
            out.append([float(v) for v in item.split(",")])
        except ValueError:
            raise ConfigError(f"--x0 expects comma-separated numbers, got {item!r}") from None
    return out


def cmd_simulate(args) -> int:
    cfg = _load(args)
    system = cfg.build_system()
    sim = cfg.simulate
    x0s = _parse_x0(args.x0) if args.x0 else _floats(sim.get("x0", []))
    if not x0s:
        raise ConfigError("simulate needs initial states ([simulate] x0 or --x0)")
    T = args.horizon if args.horizon is not None else float(sim.get("T", 50))
    step = float(sim.get("step", 1e-3))
    sig = cfg.build_signal(max(T, float(cfg.signal["horizon"])) if "horizon" in cfg.signal else None)
    out = args.out or Path(".")
    summary = []
    for k, x0 in enumerate(x0s):
        path = out / f"trajectory_{k}.csv"
        out.mkdir(parents=True, exist_ok=True)
        try:
            traj = integrate(system, sig, np.asarray(x0, dtype=float), T, step)
        except DivergenceError as exc:
            if exc.partial is not None and len(exc.partial.times):
                exc.partial.write_csv(path)
            sys.stderr.write(f"swent: trajectory {k} diverged: {exc} (partial data in {path})\n")
            return EXIT_DIVERGENCE
        traj.write_csv(path)
        summary.append({"x0": x0, "file": str(path), "final": traj.final().tolist(), "T": T})
    if args.format == "json":
        sys.stdout.write(_dump_json(summary))
    elif args.format == "csv":
        n = len(x0s[0])
        rows = [[s["file"]] + [_fmt(v) for v in s["final"]] for s in summary]
        sys.stdout.write(_csv_text(["file"] + [f"x_{i + 1}(T)" for i in range(n)], rows))
    else:
        for s in summary:
            final = ", ".join(f"{v:.6g}" for v in s["final"])
            sys.stdout.write(f"{s['file']}: x(T={T:g}) = ({final})\n")
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _load(args)
    system = cfg.build_system()
    e = cfg.estimate
    K = (CompactBox.from_intervals(_floats(e["K"])) if "K" in e else cfg.build_S(system))
    T_list = _floats(e.get("T", [1, 2, 3, 4, 5]))
    if args.horizon is not None:
        T_list = [t for t in T_list if t <= args.horizon]
    res = e.get("resolution", "auto")
    res = None if isinstance(res, str) and res.lower() == "auto" else (
        [int(r) for r in res] if isinstance(res, list) else int(res))
    sig = cfg.build_signal()
    seed = _seed(args, cfg)
    est = entropy_estimate(system, sig, K, float(e.get("eps", 0.1)), T_list, res,
                           step=float(e.get("step", 1e-2)), seed=seed)
    doc = est.to_json() + "\n"
    _write(args.out, "estimate.json", doc)
    if args.format == "json":
        sys.stdout.write(doc)
    else:
        rows = [[c.method, _fmt(c.T), _fmt(c.eps), c.count] for c in est.counts]
        if args.format == "csv":
            sys.stdout.write(_csv_text(["method", "T", "eps", "count"], rows))
        else:
            for r in rows:
                sys.stdout.write(f"{r[0]:15s} T={r[1]:>6s} eps={r[2]:>6s} count={r[3]}\n")
            span = "n/a" if est.rate_spanning is None else f"{est.rate_spanning:.4f}"
            sys.stdout.write(f"rate (separated) = {est.rate:.4f}   rate (spanning) = {span}   "
                             f"seed = {est.seed}\n")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.table not in TABLES:
        sys.stderr.write(f"swent: unknown table {args.table!r}; choose from {', '.join(sorted(TABLES))}\n")
        return EXIT_CONFIG
    cells, reports = reproduce_table(args.table, args.norm or "inf")
    worst = max(c.deviation for c in cells)
    bad = [c for c in cells if not c.ok]
    doc = {"table": args.table, "tolerance": TOLERANCE, "max_deviation": worst,
           "cells": [c.to_dict() for c in cells],
           "reports": {k: r.to_dict() for k, r in reports.items()}}
    rows = [[c.signal, c.tag, _fmt(c.computed), _fmt(c.published), _fmt(c.deviation)] for c in cells]
    csv_text = _csv_text(["signal", "tag", "computed", "published", "deviation"], rows)
    _write(args.out, f"reproduce_{args.table}.json", _dump_json(doc))
    _write(args.out, f"reproduce_{args.table}.csv", csv_text)
    if args.format == "json":
        sys.stdout.write(_dump_json(doc))
    elif args.format == "csv":
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(f"{'signal':8s} {'tag':6s} {'computed':>10s} {'published':>10s} {'dev':>8s}\n")
        for c in cells:
            flag = "" if c.ok else "  <-- exceeds tolerance"
            sys.stdout.write(f"{c.signal:8s} {c.tag:6s} {c.computed:10.4f} {c.published:10.2f} "
                             f"{c.deviation:8.4f}{flag}\n")
        sys.stdout.write(f"max deviation {worst:.4f} (tolerance {TOLERANCE})\n")
    if bad:
        names = ", ".join(f"{c.signal}/{c.tag}" for c in bad)
        sys.stderr.write(f"swent: cells outside tolerance: {names}\n")
        return EXIT_DEVIATION
    return EXIT_OK


def cmd_signal_info(args) -> int:
    cfg = _load(args)
    sig = cfg.build_signal(args.horizon)
    b = cfg.bounds
    profile = asymptotic_rates(sig, tail_fraction=float(b.get("tail_fraction", 0.5)))
    doc = {"signal": sig.to_dict(), "rates": profile.to_dict()}
    _write(args.out, "signal.json", _dump_json(doc))
    if args.format == "json":
        sys.stdout.write(_dump_json(doc))
    elif args.format == "csv":
        rows = [[p, _fmt(profile.rho_hat[p]), _fmt(profile.estimated_rho_hat[p]),
                 int(p in profile.persistent), int(p in profile.strongly_persistent)]
                for p in range(sig.num_modes)]
        sys.stdout.write(_csv_text(["mode", "rho_hat", "estimated_rho_hat", "persistent",
                                    "strongly_persistent"], rows))
    else:
        sys.stdout.write(f"kind {sig.kind}, {sig.num_modes} modes, {sig.num_switches} switches, "
                         f"horizon {sig.horizon:.12g}\n")
        for p in range(sig.num_modes):
            sys.stdout.write(f"mode {p}: rho_hat = {profile.rho_hat[p]:.6g} "
                             f"(estimated {profile.estimated_rho_hat[p]:.6g})"
                             f"{'  persistent' if p in profile.persistent else ''}"
                             f"{'  strongly persistent' if p in profile.strongly_persistent else ''}\n")
        if profile.warning:
            sys.stdout.write(f"warning: {profile.warning}\n")
    return EXIT_OK


# -- parser --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--horizon", type=float, help="override the evaluation or simulation horizon")
    common.add_argument("--seed", type=int, help="random seed (overrides SWENT_SEED and the config)")
    common.add_argument("--out", type=Path, help="directory for output files")
    common.add_argument("--norm", choices=["one", "two", "inf"], help="norm for the matrix measures")
    common.add_argument("--format", choices=["json", "table", "csv"], default="table",
                        help="format written to stdout")
    parser = _Parser(prog="swent", description="Entropy bounds and estimates for switched systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("bounds", parents=[common], help="evaluate analytic entropy bounds") \
        .set_defaults(func=cmd_bounds)
    p = sub.add_parser("simulate", parents=[common], help="write trajectories as CSV")
    p.add_argument("--x0", action="append", help="initial state, comma separated (repeatable)")
    p.set_defaults(func=cmd_simulate)
    sub.add_parser("estimate", parents=[common], help="empirical entropy estimate") \
        .set_defaults(func=cmd_estimate)
    p = sub.add_parser("reproduce", parents=[common], help="recompute a bundled table")
    p.add_argument("table", help="table1 or table2")
    p.set_defaults(func=cmd_reproduce)
    sub.add_parser("signal-info", parents=[common], help="active rates of the configured signal") \
        .set_defaults(func=cmd_signal_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"swent: config error: {exc}\n")
        return EXIT_CONFIG
    except RefusalError as exc:
        sys.stderr.write(f"swent: refused: {exc}\n")
        return EXIT_REFUSAL
    except DivergenceError as exc:
        sys.stderr.write(f"swent: diverged: {exc}\n")
        return EXIT_DIVERGENCE
    except SwentError as exc:
        sys.stderr.write(f"swent: error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

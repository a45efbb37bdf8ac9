"""Command-line front end.

Subcommands: bound, resolvent, integral-bound, simulate, verify.  Every
command honors --seed, --tol, --format {csv,json}, --out PATH and --threads;
grid-valued flags (--x, --y, --T, --r, --lambda) accept comma-separated
lists and expand to their cross product.  A JSON scenario file may supply any
value; explicit flags override it.  With --figures DIR each command also
renders a PNG alongside the delimited output.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 numerical
(tolerance) failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .bounds import CoefficientBox, Query, occupation_bound, resolvent_bound
from .controls import (
    PRESET_NAMES,
    MollificationParams,
    control_from_table,
    preset_control,
    validate_admissible,
)
from .engine import SimConfig, estimate_local_time, estimate_occupation_density
from .errors import DomainError, ToleranceError
from .integrals import path_integral_bound, time_integral_bound
from .profiles import TimeProfileFunction, load_profile_csv
from .verify import (
    run_analytic_suite,
    run_sharpness_experiment,
    run_validity_experiment,
    summarize,
    to_json_lines,
)

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

THREADS_ENV = "OCCUBOUND_THREADS"


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_rows(rows, columns, fmt, out_path):
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
        text = buf.getvalue()
    else:
        text = json.dumps(rows, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _floats(spec_value) -> list[float]:
    if isinstance(spec_value, (list, tuple)):
        return [float(v) for v in spec_value]
    return [float(tok) for tok in str(spec_value).split(",") if tok != ""]


class Scenario:
    """Flag/file value resolution: explicit flags beat scenario entries."""

    def __init__(self, args):
        self.args = args
        self.data = {}
        if getattr(args, "scenario", None):
            with open(args.scenario) as fh:
                self.data = json.load(fh)
            if not isinstance(self.data, dict):
                raise DomainError(f"{args.scenario}: scenario must be a JSON object")

    def get(self, flag, *path, default=None, required=False):
        val = getattr(self.args, flag.replace("-", "_"), None)
        if val is None:
            node = self.data
            for key in path or (flag,):
                node = node.get(key) if isinstance(node, dict) else None
                if node is None:
                    break
            val = node
        if val is None:
            val = default
        if val is None and required:
            raise DomainError(f"missing required value --{flag}")
        return val

    def box(self) -> CoefficientBox:
        return CoefficientBox(
            float(self.get("a", "box", "a", required=True)),
            float(self.get("b", "box", "b", required=True)),
            float(self.get("k", "box", "k", default=0.0)),
        )

    def threads(self) -> int:
        val = self.get("threads", default=os.environ.get(THREADS_ENV, 1))
        return max(int(val), 1)


def _add_common(p, *, sim=False):
    p.add_argument("--scenario", help="JSON scenario file; flags override it")
    p.add_argument("--a", type=float, help="diffusion lower bound")
    p.add_argument("--b", type=float, help="diffusion upper bound")
    p.add_argument("--k", type=float, help="drift-to-variance ratio")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--tol", type=float, help="numerical tolerance")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--out", help="write delimited output to this path")
    p.add_argument("--threads", type=int,
                   help=f"worker thread cap (default ${THREADS_ENV} or 1); "
                        f"never changes results")
    p.add_argument("--figures", metavar="DIR",
                   help="also render a PNG report into DIR")
    if sim:
        p.add_argument("--dt", type=float, help="Euler step size")
        p.add_argument("--n-paths", type=int, help="Monte Carlo paths")
        p.add_argument("--N", type=float, dest="N",
                       help="window parameter (window is [y-1/N, y+1/N])")
        p.add_argument("--M", type=int, help="ramp parameter of the extremal control")


def _figures(scn):
    directory = scn.get("figures")
    if not directory:
        return None
    from . import figures
    return figures, directory


def cmd_bound(args) -> int:
    scn = Scenario(args)
    box = scn.box()
    tol = float(scn.get("tol", default=1e-10))
    xs = _floats(scn.get("x", "query", "x", default=0.0))
    ys = _floats(scn.get("y", "query", "y", required=True))
    Ts = _floats(scn.get("T", "query", "T", required=True))
    rows = []
    for x in xs:
        for y in ys:
            for T in Ts:
                rep = occupation_bound(box, Query(x, y, T), tol=tol)
                rows.append({"x": x, "y": y, "T": T, "G": rep.value,
                             "error_estimate": rep.abs_error_estimate})
    _write_rows(rows, ["x", "y", "T", "G", "error_estimate"],
                scn.get("format", default="csv"), scn.get("out"))
    fig = _figures(scn)
    if fig:
        fig[0].render_bound(rows, fig[1])
    return EXIT_OK


def cmd_resolvent(args) -> int:
    scn = Scenario(args)
    box = scn.box()
    rs = _floats(scn.get("r", required=True))
    lams = _floats(scn.get("lam", "lambda", required=True))
    rows = []
    for r in rs:
        for lam in lams:
            rows.append({"r": r, "lambda": lam,
                         "Q": resolvent_bound(box, r, lam)})
    _write_rows(rows, ["r", "lambda", "Q"],
                scn.get("format", default="csv"), scn.get("out"))
    fig = _figures(scn)
    if fig:
        fig[0].render_resolvent(rows, fig[1])
    return EXIT_OK


def cmd_integral_bound(args) -> int:
    scn = Scenario(args)
    box = scn.box()
    tol = float(scn.get("tol", default=1e-8))
    x = float(scn.get("x", "query", "x", default=0.0))
    T = float(scn.get("T", "query", "T", required=True))
    profile_path = scn.get("profile", required=True)
    profile = load_profile_csv(profile_path)
    if isinstance(profile, TimeProfileFunction):
        rep = time_integral_bound(box, x, T, profile, tol=tol)
        kind = "time_integral_bound"
    else:
        rep = path_integral_bound(box, x, T, profile, tol=tol)
        kind = "path_integral_bound"
    rows = [{"x": x, "T": T, "profile": str(profile_path), "kind": kind,
             "value": rep.value, "error_estimate": rep.abs_error_estimate}]
    _write_rows(rows, ["x", "T", "profile", "kind", "value", "error_estimate"],
                scn.get("format", default="csv"), scn.get("out"))
    fig = _figures(scn)
    if fig:
        fig[0].render_integral(rows, fig[1])
    return EXIT_OK


def _resolve_control(spec, box, y, m):
    """A preset name, a path to a JSON control table, or an inline table."""
    if isinstance(spec, dict):
        return control_from_table(spec)
    if spec in PRESET_NAMES:
        return preset_control(spec, box, level=y, m=m)
    if os.path.exists(str(spec)):
        with open(spec) as fh:
            return control_from_table(json.load(fh))
    raise DomainError(f"unknown control {spec!r}: not a preset "
                      f"({', '.join(PRESET_NAMES)}) or a control file")


def cmd_simulate(args) -> int:
    scn = Scenario(args)
    box = scn.box()
    name = scn.get("control", required=True)
    ys = _floats(scn.get("y", "query", "y", default=0.0))
    cfg = SimConfig(
        dt=float(scn.get("dt", "sim", "dt", default=1e-4)),
        n_paths=int(scn.get("n_paths", "sim", "n_paths", default=10000)),
        seed=int(scn.get("seed", "sim", "seed", default=0)),
        n_window=float(scn.get("N", "sim", "N", default=50.0)),
        T=float(scn.get("T", "sim", "T", default=1.0)),
        x0=float(scn.get("x0", "sim", "x0", default=0.0)),
    )
    m = MollificationParams(int(scn.get("M", default=50)))
    estimator = scn.get("estimator", default="window")
    threads = scn.threads()
    rows = []
    for y in ys:
        ctrl = _resolve_control(name, box, y, m)
        adm = validate_admissible(box, ctrl, [0.0, cfg.T / 2.0, cfg.T],
                                  _admissibility_grid(cfg, y))
        if not adm.ok:
            listed = "; ".join(
                f"(t={t:g}, x={x:g}): sigma off by {sv:.3g}, drift by {dv:.3g}"
                for t, x, sv, dv in adm.violations[:5])
            raise DomainError(
                f"control {ctrl.label!r} violates the box "
                f"(worst sigma {adm.worst_sigma_violation:.3g}, worst drift "
                f"{adm.worst_drift_violation:.3g}): {listed}")
        if estimator == "local-time":
            est = estimate_local_time(ctrl, cfg, y, threads=threads)
        else:
            est = estimate_occupation_density(ctrl, cfg, y, threads=threads)
        rows.append({"control": ctrl.label, "y": y, "N": cfg.n_window,
                     "mean": est.mean, "std_error": est.std_error})
    _write_rows(rows, ["control", "y", "N", "mean", "std_error"],
                scn.get("format", default="csv"), scn.get("out"))
    fig = _figures(scn)
    if fig:
        fig[0].render_simulate(rows, fig[1])
    return EXIT_OK


def _admissibility_grid(cfg, y):
    span = max(abs(cfg.x0 - y), 1.0) * 4.0
    return np.linspace(min(cfg.x0, y) - span, max(cfg.x0, y) + span, 513)


def cmd_verify(args) -> int:
    scn = Scenario(args)
    only = scn.get("only", default="all")
    strict = bool(getattr(args, "strict", False) or scn.get("strict", default=False))
    threads = scn.threads()
    seed = int(scn.get("seed", default=20240801))
    reports = []
    if only in ("all", "analytic"):
        reports.extend(run_analytic_suite())
    if only in ("all", "validity"):
        box = CoefficientBox(
            float(scn.get("a", "box", "a", default=1.0)),
            float(scn.get("b", "box", "b", default=2.0)),
            float(scn.get("k", "box", "k", default=1.0)),
        )
        cfg = SimConfig(
            dt=float(scn.get("dt", "sim", "dt", default=1e-4)),
            n_paths=int(scn.get("n_paths", "sim", "n_paths", default=4000)),
            seed=seed,
            n_window=float(scn.get("N", "sim", "N", default=50.0)),
            T=1.0, x0=0.0)
        queries = [(0.0, 0.0, 1.0), (0.0, 0.5, 1.0), (0.5, 0.0, 0.5),
                   (0.0, -0.7, 1.0), (1.0, 1.0, 0.5), (0.0, 0.2, 1.0)]
        reports.extend(run_validity_experiment(box, cfg, queries,
                                               strict=strict, threads=threads))
    if only in ("all", "sharpness"):
        box = CoefficientBox(
            float(scn.get("a", "box", "a", default=1.0)),
            float(scn.get("b", "box", "b", default=2.0)),
            float(scn.get("k", "box", "k", default=1.0)),
        )
        T = float(scn.get("T", "sim", "T", default=1.0))
        cfg = SimConfig(
            dt=float(scn.get("dt", "sim", "dt", default=2e-5)),
            n_paths=int(scn.get("n_paths", "sim", "n_paths", default=4000)),
            seed=seed,
            n_window=float(scn.get("N", "sim", "N", default=100.0)),
            T=T, x0=0.0)
        Ms = [int(v) for v in _floats(scn.get("M", default="10,50"))]
        reports.extend(run_sharpness_experiment(box, 0.0, 0.0, T, Ms, cfg,
                                                strict=strict, threads=threads))
    out = scn.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(to_json_lines(reports))
    sys.stdout.write(summarize(reports))
    fig = _figures(scn)
    if fig:
        fig[0].render_verify(reports, fig[1])
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occubound",
        description="Occupation-density bounds for box-constrained Ito "
                    "processes: evaluate, simulate, verify.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="evaluate the occupation bound on a grid")
    _add_common(p)
    p.add_argument("--x", help="start point(s), comma separated")
    p.add_argument("--y", help="level(s), comma separated")
    p.add_argument("--T", help="horizon(s), comma separated")
    p.set_defaults(fn=cmd_bound)

    p = sub.add_parser("resolvent", help="evaluate the stopped-problem value")
    _add_common(p)
    p.add_argument("--r", help="distance(s), comma separated")
    p.add_argument("--lambda", dest="lam", help="rate(s), comma separated")
    p.set_defaults(fn=cmd_resolvent)

    p = sub.add_parser("integral-bound",
                       help="bound an expected path integral of a profile")
    _add_common(p)
    p.add_argument("--x", type=float, help="start point")
    p.add_argument("--T", type=float, help="horizon")
    p.add_argument("--profile", help="CSV profile table (y,f or t,y,f)")
    p.set_defaults(fn=cmd_integral_bound)

    p = sub.add_parser("simulate", help="Monte Carlo occupation estimates")
    _add_common(p, sim=True)
    p.add_argument("--control",
                   help=f"preset ({', '.join(PRESET_NAMES)}) or a JSON "
                        f"control-table file")
    p.add_argument("--y", help="level(s), comma separated")
    p.add_argument("--x0", type=float, help="start point")
    p.add_argument("--T", type=float, help="horizon")
    p.add_argument("--estimator", choices=("window", "local-time"))
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("verify", help="run the verification suites")
    _add_common(p, sim=True)
    p.add_argument("--only", choices=("all", "analytic", "validity", "sharpness"))
    p.add_argument("--strict", action="store_true",
                   help="escalate resolution warnings to failures")
    p.add_argument("--T", type=float, help="horizon for the experiments")
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ToleranceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, OSError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Every subcommand reads a problem file (except ``bench``) and writes one JSON
document to standard output.  Exit codes: 0 success, 2 invalid input,
3 negative verdict (not stationary, oracle failure).

Problem file::

    {"dimension": 2, "objective": "abs(x1) + 2*abs(x2)", "point": [1, 1],
     "inequality": [...], "equality": [...], "box": [[lo, hi], ...],
     "sense": "min"}

Diagnostics go to standard error; their level is set by ``CODIFF_LOG``
(``off``, ``info`` or ``debug``).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import expr as ex
from .analysis import (
    DEFAULT_ALPHAS,
    dir_deriv,
    expansion_residual,
    one_sided_difference,
    residual_decays,
)
from .codiff import codiff
from .config import STAT_TOL
from .descent import DescentConfig, benchmark_suite, minimize
from .jsonio import dumps
from .optimality import (
    InfeasiblePoint,
    Problem,
    RankDeficientJacobian,
    check_problem,
    coexhauster_from_codiff,
)
from .polytope import DimensionMismatch

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE = 0, 2, 3


class InputError(ValueError):
    pass


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj) + "\n")


# ---------------------------------------------------------------- problem files

def load_problem(path: str | os.PathLike) -> tuple[Problem, np.ndarray]:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise InputError(f"{path}: invalid JSON ({err})") from None
    return problem_from_json(raw)


def problem_from_json(raw: dict) -> tuple[Problem, np.ndarray]:
    if not isinstance(raw, dict):
        raise InputError("problem file must hold a JSON object")
    for key in ("dimension", "objective", "point"):
        if key not in raw:
            raise InputError(f"problem file lacks {key!r}")
    d = raw["dimension"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise InputError("'dimension' must be a positive integer")

    def parse_all(key):
        texts = raw.get(key, [])
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise InputError(f"{key!r} must be an array of expression strings")
        return tuple(_parse(t, d, key) for t in texts)

    if not isinstance(raw["objective"], str):
        raise InputError("'objective' must be an expression string")
    objective = _parse(raw["objective"], d, "objective")
    point = _vector(raw["point"], d, "point")
    box = None
    if raw.get("box") is not None:
        try:
            box = np.array(raw["box"], dtype=float)
        except (TypeError, ValueError):
            raise InputError("'box' must be an array of [lo, hi] pairs") from None
        if box.shape != (d, 2):
            raise InputError(f"'box' must hold {d} [lo, hi] pairs")
    sense = raw.get("sense", "min")
    try:
        problem = Problem(d, objective, parse_all("inequality"), parse_all("equality"),
                          box, sense)
    except ValueError as err:
        raise InputError(str(err)) from None
    return problem, point


def _parse(text: str, d: int, where: str) -> ex.Expr:
    try:
        return ex.parse(text, d)
    except ex.ParseError as err:
        raise InputError(f"{where}: {err}") from None


def _vector(value, d: int, where: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise InputError(f"{where!r} must be an array of numbers") from None
    if arr.shape[0] != d or not np.all(np.isfinite(arr)):
        raise InputError(f"{where!r} must hold {d} finite numbers")
    return arr


# ---------------------------------------------------------------- commands

def cmd_eval(args) -> int:
    p, x = load_problem(args.problem)
    _emit({"point": x, "value": ex.evaluate(p.objective, x)})
    return EXIT_OK


def cmd_codiff(args) -> int:
    p, x = load_problem(args.problem)
    _emit(codiff(p.objective, x).to_json())
    return EXIT_OK


def cmd_check(args) -> int:
    p, x = load_problem(args.problem)
    report = check_problem(p, x, args.tol)
    out = report.to_json()
    direction = report.direction
    out["direction"] = None if direction is None else direction
    _emit(out)
    return EXIT_OK if report.stationary else EXIT_NEGATIVE


def cmd_descend(args) -> int:
    p, x = load_problem(args.problem)
    if p.inequalities or p.equalities or p.box is not None or p.sense != "min":
        raise InputError("descend handles unconstrained minimisation only")
    cfg = DescentConfig(tol_stat=args.tol, max_iters=args.max_iters, seed=args.seed,
                        use_offsets=args.use_offsets)
    trace = minimize(p.objective, x, cfg)
    trace_path = Path(args.trace) if args.trace else Path(args.problem).with_suffix(".trace.jsonl")
    trace_path.write_text(trace.jsonl() + "\n")
    _emit({"x": trace.x, "f": trace.f, "status": trace.status,
           "iterations": trace.iterations, "trace": str(trace_path)})
    return EXIT_OK


def cmd_verify(args) -> int:
    p, x = load_problem(args.problem)
    rng = np.random.default_rng(args.seed)
    c = codiff(p.objective, x)
    fx = ex.evaluate(p.objective, x)
    pl = ex.is_piecewise_linear(p.objective)
    rows, ok = [], True
    for _ in range(args.dirs):
        g = rng.normal(size=p.dim)
        g /= np.linalg.norm(g)
        table = expansion_residual(p.objective, x, g, DEFAULT_ALPHAS, c)
        decays = residual_decays(table, fx)
        if pl:
            decays = decays and all(r <= 1e-9 * (1.0 + abs(fx)) / a for a, r in table)
        fd = one_sided_difference(p.objective, x, g)
        dd = dir_deriv(c, g)
        agrees = abs(fd - dd) <= 1e-5
        ok = ok and decays and agrees
        rows.append({"direction": g, "residuals": [{"alpha": a, "ratio": r} for a, r in table],
                     "decays": decays, "dir_deriv": dd, "finite_difference": fd})
    _emit({"value": fx, "piecewise_linear": pl, "table": rows,
           "verdict": "pass" if ok else "fail"})
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_coexhauster(args) -> int:
    p, x = load_problem(args.problem)
    _emit(coexhauster_from_codiff(codiff(p.objective, x)).to_json())
    return EXIT_OK


def cmd_bench(args) -> int:
    suite = benchmark_suite()
    if args.name:
        suite = [b for b in suite if b.name == args.name]
        if not suite:
            raise InputError(f"unknown benchmark {args.name!r}")
    rows = []
    for b in suite:
        row = {"name": b.name, "known_value": b.value,
               "minimizer_check": check_problem(b.problem, b.minimizer).verdict}
        if b.check == "unconstrained":
            trace = minimize(b.problem.objective, b.start,
                             DescentConfig(max_iters=args.max_iters, seed=args.seed))
            row.update({"solver_value": trace.f, "iterations": trace.iterations,
                        "status": trace.status, "error": abs(trace.f - b.value)})
        rows.append(row)
    _emit(rows)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codiff",
        description="Codifferentials, optimality checks and codifferential descent.",
        epilog="Exit codes: 0 ok, 2 invalid input, 3 negative verdict.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_problem(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-p", "--problem", required=True, help="problem JSON file")
        return sp

    with_problem("eval", "evaluate the objective at the point").set_defaults(func=cmd_eval)
    with_problem("codiff", "codifferential of the objective at the point").set_defaults(
        func=cmd_codiff)
    sp = with_problem("check", "necessary optimality check at the point")
    sp.add_argument("--tol", type=float, default=STAT_TOL,
                    help=f"membership tolerance (default {STAT_TOL:g})")
    sp.set_defaults(func=cmd_check)
    sp = with_problem("descend", "codifferential descent from the point")
    sp.add_argument("--max-iters", type=int, default=500, help="iteration cap (default 500)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-7,
                    help="stationarity tolerance (default 1e-07)")
    sp.add_argument("--trace", help="trace output path (default <problem>.trace.jsonl)")
    sp.add_argument("--use-offsets", action="store_true",
                    help="steer with nearly active generators")
    sp.set_defaults(func=cmd_descend)
    sp = with_problem("verify", "residual and finite-difference oracles at the point")
    sp.add_argument("--dirs", type=int, default=8, help="random directions (default 8)")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)
    with_problem("coexhauster", "upper coexhauster from the codifferential").set_defaults(
        func=cmd_coexhauster)
    sp = sub.add_parser("bench", help="run the shipped benchmark suite")
    sp.add_argument("--name", help="run a single benchmark")
    sp.add_argument("--max-iters", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_bench)
    return parser


def _configure_logging() -> None:
    level = os.environ.get("CODIFF_LOG", "off").lower()
    levels = {"off": logging.CRITICAL + 1, "info": logging.INFO, "debug": logging.DEBUG}
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("codiffkit")
    root.handlers[:] = [handler]
    root.setLevel(levels.get(level, logging.CRITICAL + 1))
    root.propagate = False


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ex.ParseError, ex.EvalDomainError, InfeasiblePoint,
            RankDeficientJacobian, DimensionMismatch, ValueError) as err:
        print(f"codiff: error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

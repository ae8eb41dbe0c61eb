"""Codifferential descent for unconstrained minimisation.

At an iterate ``x`` the solver projects the origin onto
``conv(active hypo gradients) + w`` for every active hyper vertex ``w``.  If
every projection is within ``tol_stat`` of the origin the point passes the
minimality check and the run stops; otherwise the longest projection ``z``
gives the search direction ``-z / ||z||`` and an Armijo backtracking search
is run along it.

With ``use_offsets`` the search direction is first computed from the
*nearly* active hypo generators, those whose offset lies within half of the
previous decrease of F; this lets a step run along a kink that is about to
become active instead of zigzagging across it.  If that direction yields no
Armijo step the active-only direction is used.  The stopping test never uses
offsets.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import expr as ex
from .codiff import Codifferential, codiff
from .config import GEOM_TOL, active_tol
from .jsonio import dumps
from .optimality import Problem
from .polytope import VPolytope, distance_to_hull

log = logging.getLogger(__name__)

__all__ = ["DescentConfig", "IterRecord", "DescentTrace", "minimize", "Benchmark",
           "benchmark_suite", "get_benchmark", "unconstrained"]


@dataclass(frozen=True)
class DescentConfig:
    tol_stat: float = 1e-7
    max_iters: int = 500
    armijo_c: float = 1e-4
    rho: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 60
    seed: int = 0
    use_offsets: bool = False

    def __post_init__(self):
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.initial_step <= 0.0 or self.tol_stat <= 0.0:
            raise ValueError("initial_step and tol_stat must be positive")


@dataclass
class IterRecord:
    k: int
    x: list[float]
    f: float
    viol: float
    hyper_vertex: int | None
    step: float

    def to_json(self) -> dict:
        return {"k": self.k, "x": self.x, "f": self.f, "viol": self.viol, "step": self.step}


@dataclass
class DescentTrace:
    iterates: list[IterRecord] = field(default_factory=list)
    status: str = "iter_cap"
    message: str = ""

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.iterates[-1].x)

    @property
    def f(self) -> float:
        return self.iterates[-1].f

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    def jsonl(self) -> str:
        return "\n".join(dumps(r.to_json()) for r in self.iterates)


def _project_worst(c: Codifferential, hypo_tol: float, fw_tol: float):
    """Longest min-norm point of ``conv(v : a >= -hypo_tol) + w`` over active ``w``."""
    t = active_tol(c.value)
    hyper = c.hyper.points
    P = c.hypo.points
    sub = VPolytope(P[P[:, 0] >= -max(hypo_tol, t), 1:])
    worst, worst_z, worst_j = -1.0, None, None
    for j in np.flatnonzero(np.abs(hyper[:, 0]) <= t):
        proj = distance_to_hull(sub, -hyper[j, 1:], fw_tol)
        if proj.dist > worst:
            worst, worst_z, worst_j = proj.dist, proj.point + hyper[j, 1:], int(j)
    return worst, worst_z, worst_j


def _armijo(e: ex.Expr, x, f, z, cfg: DescentConfig):
    """Backtracking along ``-z / ||z||``; returns ``(step, x_new, f_new)`` or None."""
    znorm = float(np.linalg.norm(z))
    g = -z / znorm
    step = cfg.initial_step * znorm
    for _ in range(cfg.max_backtracks):
        trial = x + step * g
        try:
            ft = ex.evaluate(e, trial)
        except ArithmeticError:
            ft = math.inf
        if ft <= f - cfg.armijo_c * step * znorm:
            return step, trial, ft
        step *= cfg.rho
    return None


def minimize(e: ex.Expr, x0, cfg: DescentConfig = DescentConfig()) -> DescentTrace:
    """Minimise ``e`` from ``x0``.

    The returned trace always ends in one of the statuses ``stationary``,
    ``iter_cap`` or ``line_search_failure``; F is non-increasing along it.
    """
    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    f = ex.evaluate(e, x)
    fw_tol = min(cfg.tol_stat, GEOM_TOL) * 1e-2
    trace = DescentTrace()
    eps = 0.0
    for k in range(cfg.max_iters + 1):
        c = codiff(e, x)
        viol, z, j = _project_worst(c, 0.0, fw_tol)
        record = IterRecord(k, x.tolist(), f, viol, j, 0.0)
        trace.iterates.append(record)
        log.debug("k=%d f=%.12g viol=%.3e eps=%.3e", k, f, viol, eps)
        if viol <= cfg.tol_stat:
            trace.status = "stationary"
            return trace
        if k == cfg.max_iters:
            break
        found = None
        if cfg.use_offsets and eps > 0.0:
            viol_eps, z_eps, j_eps = _project_worst(c, eps, fw_tol)
            if viol_eps > cfg.tol_stat:
                found = _armijo(e, x, f, z_eps, cfg)
                if found is not None:
                    record.hyper_vertex = j_eps
        if found is None:
            found = _armijo(e, x, f, z, cfg)
        if found is None:
            trace.status = "line_search_failure"
            trace.message = (f"no sufficient decrease after {cfg.max_backtracks} backtracks "
                             f"(violation {viol:.3e})")
            return trace
        record.step, x, f_new = found
        # generators whose offset is within half the last decrease count as nearly active
        eps = 0.5 * (f - f_new)
        f = f_new
    trace.status = "iter_cap"
    return trace


# ---------------------------------------------------------------- benchmarks

@dataclass(frozen=True)
class Benchmark:
    name: str
    problem: Problem
    minimizer: tuple[float, ...]
    value: float
    start: tuple[float, ...]
    piecewise_linear: bool = False
    isolated: bool = True  # minimiser is a strict local minimiser
    check: str = "unconstrained"


def benchmark_suite() -> list[Benchmark]:
    """Shipped test problems with documented minimisers and values."""
    P = ex.parse
    return [
        Benchmark("l1", Problem(2, P("abs(x1) + 2*abs(x2)", 2)), (0.0, 0.0), 0.0, (1.0, 1.0),
                  piecewise_linear=True),
        Benchmark("maxq2", Problem(2, P("max(x1^2 + (x2-1)^2, x1^2 + (x2+1)^2)", 2)),
                  (0.0, 0.0), 1.0, (3.0, 0.2)),
        # DC example; minimal value -1 on the quadrant x1 <= 1, x2 <= -2
        Benchmark("dcline", Problem(2, P("abs(x1-1) + abs(x2+2) - abs(x1+x2)", 2)),
                  (0.0, -3.0), -1.0, (1.0, 0.0), piecewise_linear=True, isolated=False),
        Benchmark("quad", Problem(2, P("(x1-1)^2 + 2*(x2+0.5)^2", 2)), (1.0, -0.5), 0.0,
                  (-2.0, 2.0)),
        Benchmark("chained", Problem(2, P("max(abs(x1), abs(x2 - 2*x1))", 2)), (0.0, 0.0), 0.0,
                  (1.0, -1.0), piecewise_linear=True),
        Benchmark("box_abs", Problem(1, P("abs(x1)", 1), box=np.array([[1.0, 2.0]])), (1.0,), 1.0,
                  (1.5,), piecewise_linear=True, check="box"),
        Benchmark("ineq_lin", Problem(1, P("x1", 1), inequalities=(P("x1^2 - 1", 1),)), (-1.0,),
                  -1.0, (0.0,), check="constrained"),
        Benchmark("eq_l1", Problem(2, P("abs(x1) + abs(x2)", 2),
                                   equalities=(P("x1 + x2 - 2", 2),)),
                  (1.0, 1.0), 2.0, (2.0, 0.0), piecewise_linear=True, isolated=False,
                  check="equality"),
    ]


def get_benchmark(name: str) -> Benchmark:
    for b in benchmark_suite():
        if b.name == name:
            return b
    raise KeyError(f"unknown benchmark {name!r}")


def unconstrained(benchmarks: Iterable[Benchmark]) -> list[Benchmark]:
    return [b for b in benchmarks if b.check == "unconstrained"]

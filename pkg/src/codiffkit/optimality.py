"""Necessary optimality conditions in terms of codifferentials.

Each condition is reduced to finitely many hull-membership tests.  For a
normalised codifferential the subdifferential at zero of ``Phi`` is the hull of
the active hypo gradients, and the superdifferential of ``Psi`` is the hull of
the active hyper gradients; a minimality condition of the form "for every
``w`` in the superdifferential, ``0`` lies in ``sub + w``" therefore only has
to be tested at the hyper *vertices*, because the target set is convex in
``w``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .codiff import Codifferential, codiff
from .config import FEAS_TOL, GEOM_TOL, SELECTION_CAP, STAT_TOL, active_tol
from .polytope import (
    VPolytope,
    distance_to_hull,
    distance_to_hull_plus_cone,
    minkowski_sum,
    prune,
)

__all__ = [
    "Problem",
    "Witness",
    "StationarityReport",
    "Coexhauster",
    "InfeasiblePoint",
    "RankDeficientJacobian",
    "check_min_unconstrained",
    "check_max_unconstrained",
    "check_min_box",
    "check_min_constrained",
    "check_min_equality",
    "check_problem",
    "coexhauster_from_codiff",
    "check_max_coexhauster",
    "box_normal_rays",
]


class InfeasiblePoint(ValueError):
    pass


class RankDeficientJacobian(ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    """``objective -> min/max`` subject to ``inequalities`` (``<= 0`` for min,
    ``>= 0`` for max), smooth ``equalities == 0`` and an optional box."""

    dim: int
    objective: ex.Expr
    inequalities: tuple[ex.Expr, ...] = ()
    equalities: tuple[ex.Expr, ...] = ()
    box: np.ndarray | None = None  # shape (dim, 2): lower, upper
    sense: str = "min"

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        for e in (self.objective, *self.inequalities, *self.equalities):
            if ex.max_var_index(e) > self.dim:
                raise ValueError("expression uses a variable beyond the problem dimension")
        if self.box is not None:
            box = np.asarray(self.box, dtype=float).reshape(self.dim, 2)
            if np.any(box[:, 0] > box[:, 1]):
                raise ValueError("box lower bounds must not exceed upper bounds")
            object.__setattr__(self, "box", box)
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        object.__setattr__(self, "equalities", tuple(self.equalities))


@dataclass
class Witness:
    selection: list
    distance: float
    direction: list | None = None
    multiplier: list | None = None

    def to_json(self) -> dict:
        out = {"selection": self.selection, "distance": self.distance,
               "direction": self.direction}
        if self.multiplier is not None:
            out["multiplier"] = self.multiplier
        return out


@dataclass
class StationarityReport:
    verdict: str
    worst_violation: float
    witnesses: list[Witness] = field(default_factory=list)
    active_set: list[int] = field(default_factory=lambda: [0])
    truncated: bool = False
    tol: float = STAT_TOL

    @property
    def stationary(self) -> bool:
        return self.verdict == "stationary"

    @property
    def direction(self) -> np.ndarray | None:
        """Direction attached to the worst violated membership, if any."""
        bad = [w for w in self.witnesses if w.direction is not None]
        if not bad:
            return None
        return np.asarray(max(bad, key=lambda w: w.distance).direction)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "worst_violation": self.worst_violation,
            "active_set": list(self.active_set),
            "witnesses": [w.to_json() for w in self.witnesses],
            "truncated": self.truncated,
        }


def _report(witnesses: list[Witness], tol: float, active_set=(0,), truncated=False):
    worst = max((w.distance for w in witnesses), default=0.0)
    verdict = "stationary" if worst <= tol else "not_stationary"
    return StationarityReport(verdict, worst, witnesses, list(active_set), truncated, tol)


def _fw_tol(tol: float) -> float:
    return min(tol, GEOM_TOL) * 1e-2


def _unit(v: np.ndarray) -> list | None:
    n = float(np.linalg.norm(v))
    if n == 0.0 or not math.isfinite(n):
        return None
    return (v / n + 0.0).tolist()


def _active_indices(P: VPolytope, tol: float) -> np.ndarray:
    return np.flatnonzero(np.abs(P.points[:, 0]) <= tol)


# ---------------------------------------------------------------- unconstrained

def check_min_unconstrained(c: Codifferential, tol: float = STAT_TOL) -> StationarityReport:
    """For every active hyper vertex ``w``: ``dist(-w, conv(active sub)) <= tol``.

    A failing ``w`` yields the descent direction ``-(z + w) / ||z + w||`` where
    ``z`` is the projection of ``-w``.
    """
    return check_min_box(c, None, None, tol)


def check_max_unconstrained(c: Codifferential, tol: float = STAT_TOL) -> StationarityReport:
    """Mirror of :func:`check_min_unconstrained`: for every active hypo vertex
    ``v``, ``dist(-v, conv(active sup)) <= tol``; failures give an ascent
    direction."""
    t = active_tol(c.value)
    sup = VPolytope(c.active_hyper(t))
    witnesses = []
    for j in _active_indices(c.hypo, t):
        v = c.hypo.points[j, 1:]
        proj = distance_to_hull(sup, -v, _fw_tol(tol))
        direction = _unit(proj.point + v) if proj.dist > tol else None
        witnesses.append(Witness([int(j)], proj.dist, direction))
    return _report(witnesses, tol)


def box_normal_rays(x, box, tol: float = FEAS_TOL) -> np.ndarray:
    """Generators of the normal cone of the box at ``x``:
    ``-e_i`` at tight lower bounds, ``+e_i`` at tight upper bounds."""
    x = np.asarray(x, dtype=float).reshape(-1)
    box = np.asarray(box, dtype=float).reshape(x.shape[0], 2)
    if np.any(x < box[:, 0] - tol) or np.any(x > box[:, 1] + tol):
        raise InfeasiblePoint("point lies outside the box")
    rays = []
    for i, (lo, hi) in enumerate(box):
        if math.isfinite(lo) and abs(x[i] - lo) <= tol:
            r = np.zeros(x.shape[0])
            r[i] = -1.0
            rays.append(r)
        if math.isfinite(hi) and abs(x[i] - hi) <= tol:
            r = np.zeros(x.shape[0])
            r[i] = 1.0
            rays.append(r)
    return np.array(rays).reshape(-1, x.shape[0])


def check_min_box(c: Codifferential, x, box, tol: float = STAT_TOL) -> StationarityReport:
    """Minimality on a box: for every active hyper vertex ``w``,
    ``dist(-w, conv(active sub) + normal cone) <= tol``.

    ``box=None`` (or an all-infinite box) is the unconstrained check.
    """
    t = active_tol(c.value)
    sub = VPolytope(c.active_hypo(t))
    rays = np.zeros((0, c.dim)) if box is None else box_normal_rays(x, box)
    witnesses = []
    for j in _active_indices(c.hyper, t):
        w = c.hyper.points[j, 1:]
        proj = distance_to_hull_plus_cone(sub, rays, -w, _fw_tol(tol))
        direction = _unit(-(proj.point + w)) if proj.dist > tol else None
        witnesses.append(Witness([int(j)], proj.dist, direction))
    return _report(witnesses, tol)


# ---------------------------------------------------------------- constraints

def _selections(cods: Sequence[Codifferential], cap: int):
    choices = [_active_indices(c.hyper, active_tol(c.value)) for c in cods]
    total = math.prod(len(ch) for ch in choices)
    sels = itertools.islice(itertools.product(*choices), cap)
    return sels, total > cap


def _active_constraints(p: Problem, x: np.ndarray, tol_feas: float) -> list[int]:
    R = [0]
    for i, f in enumerate(p.inequalities, start=1):
        fi = ex.evaluate(f, x)
        if fi > tol_feas:
            raise InfeasiblePoint(f"inequality {i} violated: f_{i}(x) = {fi:.3e}")
        if fi >= -max(tol_feas, active_tol(fi)):
            R.append(i)
    return R


def check_min_constrained(p: Problem, x, tol: float = STAT_TOL, tol_feas: float = FEAS_TOL,
                          cap: int = SELECTION_CAP) -> StationarityReport:
    """Inequality-constrained minimality (box constraints allowed).

    For every selection of active hyper vertices ``w_i`` (``i`` in the active
    set R(x)) the origin must lie, within ``tol``, in
    ``conv(U_{i in R} (active sub_i + w_i))`` plus the box normal cone.
    """
    if p.equalities:
        raise ValueError("problem has equality constraints; use check_min_equality")
    x = np.asarray(x, dtype=float).reshape(-1)
    R = _active_constraints(p, x, tol_feas)
    funcs = [p.objective, *p.inequalities]
    cods = [codiff(funcs[i], x) for i in R]
    subs = [c.active_hypo() for c in cods]
    rays = np.zeros((0, p.dim)) if p.box is None else box_normal_rays(x, p.box, tol_feas)

    sels, truncated = _selections(cods, cap)
    witnesses = []
    for sel in sels:
        pooled = np.vstack([subs[k] + cods[k].hyper.points[j, 1:] for k, j in enumerate(sel)])
        proj = distance_to_hull_plus_cone(VPolytope(pooled), rays, np.zeros(p.dim), _fw_tol(tol))
        direction = _unit(-proj.point) if proj.dist > tol else None
        witnesses.append(Witness([[R[k], int(j)] for k, j in enumerate(sel)], proj.dist, direction))
    return _report(witnesses, tol, R, truncated)


def check_min_equality(p: Problem, x, tol: float = STAT_TOL, tol_feas: float = FEAS_TOL,
                       cap: int = SELECTION_CAP, rank_tol: float = 1e-10) -> StationarityReport:
    """Minimality with smooth equality and codifferentiable inequality constraints.

    For every selection of active hyper vertices ``(0, q_i)``, ``i`` in R(x),
    look for simplex weights over the pooled generators of
    ``U_{i in R} (hypo_i + (0, q_i))`` and a multiplier ``y`` with
    ``sum lam a = 0`` and ``sum lam v = J^T y``.  Eliminating ``y`` by the
    orthogonal projector onto ``ker J`` turns this into the distance from the
    origin to the hull of the points ``(a, P v)``.
    """
    if not p.equalities:
        raise ValueError("problem has no equality constraints")
    x = np.asarray(x, dtype=float).reshape(-1)
    rows = []
    for k, h in enumerate(p.equalities, start=1):
        hk = ex.evaluate(h, x)
        if abs(hk) > tol_feas:
            raise InfeasiblePoint(f"equality {k} violated: h_{k}(x) = {hk:.3e}")
        ch = codiff(h, x)
        if len(ch.hypo) != 1 or len(ch.hyper) != 1:
            raise ValueError(f"equality {k} is not smooth at the point")
        rows.append(ch.hypo.points[0, 1:] + ch.hyper.points[0, 1:])
    J = np.array(rows)
    svals = np.linalg.svd(J, compute_uv=False)
    if svals.min() <= rank_tol * max(1.0, svals.max()):
        raise RankDeficientJacobian(
            f"equality Jacobian is rank deficient (smallest singular value {svals.min():.3e})")
    proj_ker = np.eye(p.dim) - J.T @ np.linalg.solve(J @ J.T, J)
    scale_ = 1.0 + float(np.linalg.norm(J, 2))

    R = _active_constraints(p, x, tol_feas)
    funcs = [p.objective, *p.inequalities]
    cods = [codiff(funcs[i], x) for i in R]
    sels, truncated = _selections(cods, cap)
    witnesses = []
    for sel in sels:
        pooled = np.vstack([cods[k].hypo.points + np.r_[0.0, cods[k].hyper.points[j, 1:]]
                            for k, j in enumerate(sel)])
        lifted = np.hstack([pooled[:, :1], pooled[:, 1:] @ proj_ker])
        proj = distance_to_hull(VPolytope(lifted), np.zeros(p.dim + 1), _fw_tol(tol))
        combo = proj.coeffs @ pooled[:, 1:]
        y, *_ = np.linalg.lstsq(J.T, combo, rcond=None)
        feasible = proj.dist <= tol * scale_
        direction = None if feasible else _unit(-(proj_ker @ combo))
        witnesses.append(Witness([[R[k], int(j)] for k, j in enumerate(sel)],
                                 proj.dist, direction, (y + 0.0).tolist()))
    report = _report(witnesses, tol * scale_, R, truncated)
    report.tol = tol
    return report


def check_problem(p: Problem, x, tol: float = STAT_TOL) -> StationarityReport:
    """Dispatch to the applicable check for ``p`` at ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if p.sense == "max":
        if p.inequalities or p.equalities:
            raise ValueError("constrained maximisation checks are not supported")
        c = codiff(p.objective, x)
        if p.box is None:
            return check_max_unconstrained(c, tol)
        neg = codiff(ex.Neg(p.objective), x)
        return check_min_box(neg, x, p.box, tol)
    if p.equalities:
        return check_min_equality(p, x, tol)
    if p.inequalities:
        return check_min_constrained(p, x, tol)
    c = codiff(p.objective, x)
    if p.box is None:
        return check_min_unconstrained(c, tol)
    return check_min_box(c, x, p.box, tol)


# ---------------------------------------------------------------- coexhausters

@dataclass(frozen=True)
class Coexhauster:
    """Finite family of polytopes ``C`` with
    ``F(x + dx) - F(x) = min_C max_{(a,p) in C} (a + <p, dx>) + o(dx)``."""

    family: tuple[VPolytope, ...]
    value: float = 0.0

    def __post_init__(self):
        if not self.family:
            raise ValueError("a coexhauster needs at least one member")

    @property
    def dim(self) -> int:
        return self.family[0].dim - 1

    def evaluate(self, dx) -> float:
        dx = np.asarray(dx, dtype=float).reshape(-1)
        return float(min(np.max(C.points[:, 0] + C.points[:, 1:] @ dx) for C in self.family))

    def to_json(self) -> dict:
        return {"dim": self.dim, "family": [C.points.tolist() for C in self.family]}


def coexhauster_from_codiff(c: Codifferential) -> Coexhauster:
    """One member ``hypo + {(b, w)}`` per hyper vertex ``(b, w)``.

    Members built from inactive hyper vertices have ``max a = b > 0``; they are
    kept (the family still expands ``F``) but never enter the max condition.
    """
    family = tuple(prune(minkowski_sum(c.hypo, VPolytope(row[None, :])))
                   for row in c.hyper.points)
    return Coexhauster(family, c.value)


@dataclass
class CoexhausterReport:
    verdict: str
    per_direction: list[dict]

    @property
    def stationary(self) -> bool:
        return self.verdict == "stationary"

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "directions": self.per_direction}


def check_max_coexhauster(E: Coexhauster, directions, tol: float = STAT_TOL) -> CoexhausterReport:
    """Finite-family maximality test: for each ``g`` some member ``C`` with
    ``max a = 0`` has ``max <p, g> <= tol`` over its active vertices ``(0, p)``."""
    t = active_tol(E.value)
    members = [C.points[np.abs(C.points[:, 0]) <= t, 1:] for C in E.family
               if abs(C.points[:, 0].max()) <= t]
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if dirs.shape[0] == 0:
        raise ValueError("at least one direction is required")
    if dirs.shape[1] != E.dim:
        dirs = dirs.reshape(-1, E.dim)
    rows = []
    for g in dirs:
        slopes = [float((P @ g).max()) for P in members]
        best = int(np.argmin(slopes))
        rows.append({"direction": g.tolist(), "passed": slopes[best] <= tol,
                     "member": best, "slope": slopes[best]})
    verdict = "stationary" if all(r["passed"] for r in rows) else "not_stationary"
    return CoexhausterReport(verdict, rows)

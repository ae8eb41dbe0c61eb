"""Codifferentials of expressions by structural recursion.

A codifferential of ``F`` at ``x`` is a pair of polytopes of affine generators
``(a, v)``: the hypodifferential ``U`` and hyperdifferential ``V`` with

    F(x + dx) - F(x) = max_{(a,v) in U} (a + <v, dx>)
                     + min_{(b,w) in V} (b + <w, dx>) + o(dx).

Pairs are only defined up to an equivalence (adding an affine function to one
half and subtracting it from the other leaves the expansion unchanged), so
every rule returns the canonical representative produced by
:func:`normalize`: ``max a = 0`` over ``U``, ``min b = 0`` over ``V``, both
halves pruned, and a singleton ``V`` folded into ``U`` so that ``V = {0}``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from .config import DRIFT_TOL, GEOM_TOL, active_tol
from .polytope import (
    DimensionMismatch,
    VPolytope,
    minkowski_sum,
    origin,
    prune,
    scale,
    translate,
)

log = logging.getLogger(__name__)

__all__ = [
    "Codifferential",
    "NormalizationDrift",
    "codiff",
    "normalize",
    "compose_inner",
    "rule_const",
    "rule_var",
    "rule_sum",
    "rule_scale",
    "rule_smooth_outer",
    "rule_sup",
    "rule_inf",
    "rule_abs",
]


class NormalizationDrift(RuntimeError):
    """The calculus produced a pair with ``max a + min b`` visibly nonzero."""


@dataclass(frozen=True)
class Codifferential:
    hypo: VPolytope
    hyper: VPolytope
    value: float = 0.0  # F(x); scales the active-vertex tolerance

    def __post_init__(self):
        if self.hypo.dim != self.hyper.dim:
            raise DimensionMismatch("hypo and hyper dimensions differ")

    @property
    def dim(self) -> int:
        return self.hypo.dim - 1

    def phi(self, dx) -> float:
        dx = np.asarray(dx, dtype=float).reshape(-1)
        P = self.hypo.points
        return float(np.max(P[:, 0] + P[:, 1:] @ dx))

    def psi(self, dx) -> float:
        dx = np.asarray(dx, dtype=float).reshape(-1)
        P = self.hyper.points
        return float(np.min(P[:, 0] + P[:, 1:] @ dx))

    def expansion(self, dx) -> float:
        """``Phi(dx) + Psi(dx)``, the first-order model of ``F(x + dx) - F(x)``."""
        return self.phi(dx) + self.psi(dx)

    def active_hypo(self, tol: float | None = None) -> np.ndarray:
        """Gradients ``v`` of hypo vertices with ``|a| <= tol``."""
        t = active_tol(self.value) if tol is None else tol
        P = self.hypo.points
        return P[np.abs(P[:, 0]) <= t, 1:]

    def active_hyper(self, tol: float | None = None) -> np.ndarray:
        t = active_tol(self.value) if tol is None else tol
        P = self.hyper.points
        return P[np.abs(P[:, 0]) <= t, 1:]

    def lipschitz_bound(self) -> float:
        """``max ||v||`` over hypo plus ``max ||w||`` over hyper."""
        return float(np.linalg.norm(self.hypo.points[:, 1:], axis=1).max()
                     + np.linalg.norm(self.hyper.points[:, 1:], axis=1).max())

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "hypo": self.hypo.points.tolist(),
            "hyper": self.hyper.points.tolist(),
            "value": self.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Codifferential":
        d = int(obj["dim"])
        return cls(VPolytope(obj["hypo"], dim=d + 1), VPolytope(obj["hyper"], dim=d + 1),
                   float(obj.get("value", 0.0)))


def normalize(hypo: VPolytope, hyper: VPolytope, value: float = 0.0, *,
              absorb: bool = True, tol: float = GEOM_TOL) -> tuple[Codifferential, float]:
    """Canonical representative of the pair ``(hypo, hyper)``.

    Shifts hypo offsets so that ``max a = 0`` and hyper offsets so that
    ``min b = 0``; the returned drift ``|max a + min b|`` is the amount by
    which ``Phi(0) + Psi(0)`` moved.  With ``absorb`` a singleton hyper
    ``{(0, w)}`` is folded into the hypo half.
    """
    if hypo.dim != hyper.dim:
        raise DimensionMismatch("hypo and hyper dimensions differ")
    U = prune(hypo, tol).points.copy()
    V = prune(hyper, tol).points.copy()
    top, bottom = U[:, 0].max(), V[:, 0].min()
    drift = abs(top + bottom)
    U[:, 0] -= top
    V[:, 0] -= bottom
    if absorb and V.shape[0] == 1:
        U[:, 1:] += V[0, 1:]
        V = np.zeros_like(V)
    # + 0.0 turns negative zeros into zeros
    return Codifferential(VPolytope(U + 0.0), VPolytope(V + 0.0), value), float(drift)


def _canonical(hypo, hyper, value, *, absorb: bool = True) -> Codifferential:
    c, drift = normalize(hypo, hyper, value, absorb=absorb)
    if drift > DRIFT_TOL * (1.0 + abs(value)):
        raise NormalizationDrift(f"normalisation drift {drift:.3e}")
    return c


# ---------------------------------------------------------------- rules

def rule_const(dim: int, value: float = 0.0) -> Codifferential:
    return Codifferential(origin(dim + 1), origin(dim + 1), value)


def rule_var(i: int, dim: int, value: float = 0.0) -> Codifferential:
    """Codifferential of the coordinate ``x_i`` (1-based)."""
    if not 1 <= i <= dim:
        raise DimensionMismatch(f"x{i} outside x1..x{dim}")
    v = np.zeros((1, dim + 1))
    v[0, i] = 1.0
    return Codifferential(VPolytope(v), origin(dim + 1), value)


def rule_sum(c1: Codifferential, c2: Codifferential) -> Codifferential:
    if c1.dim != c2.dim:
        raise DimensionMismatch("summands have different dimensions")
    return _canonical(minkowski_sum(c1.hypo, c2.hypo), minkowski_sum(c1.hyper, c2.hyper),
                      c1.value + c2.value)


def rule_scale(c: Codifferential, alpha: float, *, absorb: bool = True) -> Codifferential:
    """``alpha * F``; a negative factor swaps the hypo and hyper halves."""
    if alpha >= 0:
        return _canonical(scale(c.hypo, alpha), scale(c.hyper, alpha), alpha * c.value,
                          absorb=absorb)
    return _canonical(scale(c.hyper, alpha), scale(c.hypo, alpha), alpha * c.value,
                      absorb=absorb)


def rule_smooth_outer(grad: Sequence[float], children: Sequence[Codifferential],
                      value: float) -> Codifferential:
    """``g(F_1, ..., F_n)`` for a C^1 outer map ``g`` with gradient ``grad`` at ``(F_i(x))``."""
    if len(grad) != len(children):
        raise ValueError("one partial derivative per child is required")
    out = rule_scale(children[0], float(grad[0]))
    for gi, ci in zip(grad[1:], children[1:]):
        out = rule_sum(out, rule_scale(ci, float(gi)))
    return Codifferential(out.hypo, out.hyper, value)


def _neg_sum(polys: Sequence[VPolytope], dim: int) -> VPolytope:
    out = origin(dim + 1)
    for p in polys:
        out = minkowski_sum(out, scale(p, -1.0))
    return out


def _sum(polys: Sequence[VPolytope], dim: int) -> VPolytope:
    out = origin(dim + 1)
    for p in polys:
        out = minkowski_sum(out, p)
    return out


def _shifted_union(own: Sequence[VPolytope], other: Sequence[VPolytope],
                   offsets: Sequence[float], dim: int) -> VPolytope:
    pieces = []
    for i, (P, off) in enumerate(zip(own, offsets)):
        rest = _neg_sum([Q for j, Q in enumerate(other) if j != i], dim)
        shift = np.zeros(dim + 1)
        shift[0] = off
        pieces.append(minkowski_sum(translate(P, shift), rest).points)
    return prune(VPolytope(np.vstack(pieces)))


def rule_sup(children: Sequence[Codifferential]) -> Codifferential:
    """``max_i F_i``.

    hypo = U{ (F_i - F) + U_i - sum_{j != i} V_j },  hyper = sum_k V_k.
    """
    dim = _common_dim(children)
    values = [c.value for c in children]
    F = max(values)
    hypo = _shifted_union([c.hypo for c in children], [c.hyper for c in children],
                          [v - F for v in values], dim)
    return _canonical(hypo, _sum([c.hyper for c in children], dim), F)


def rule_inf(children: Sequence[Codifferential]) -> Codifferential:
    """``min_i F_i``.

    hypo = sum_k U_k,  hyper = U{ (F_i - G) + V_i - sum_{j != i} U_j }.
    """
    dim = _common_dim(children)
    values = [c.value for c in children]
    G = min(values)
    hyper = _shifted_union([c.hyper for c in children], [c.hypo for c in children],
                           [v - G for v in values], dim)
    return _canonical(_sum([c.hypo for c in children], dim), hyper, G)


def rule_abs(c: Codifferential) -> Codifferential:
    return rule_sup([c, rule_scale(c, -1.0)])


def _common_dim(children: Sequence[Codifferential]) -> int:
    dims = {c.dim for c in children}
    if len(dims) != 1:
        raise DimensionMismatch(f"children have dimensions {sorted(dims)}")
    return dims.pop()


# ---------------------------------------------------------------- recursion

def _node_codiff(n: ex.Expr, kids: list[Codifferential], vals: dict[int, float],
                 dim: int) -> Codifferential:
    y = vals[id(n)]
    if isinstance(n, ex.Const):
        return rule_const(dim, y)
    if isinstance(n, ex.Var):
        return rule_var(n.index, dim, y)
    if isinstance(n, ex.Add):
        return rule_sum(kids[0], kids[1])
    if isinstance(n, ex.Neg):
        return rule_scale(kids[0], -1.0)
    if isinstance(n, ex.Abs):
        return rule_abs(kids[0])
    if isinstance(n, ex.Max):
        return rule_sup(kids)
    if isinstance(n, ex.Min):
        return rule_inf(kids)
    if isinstance(n, ex.Mul):
        a, b = vals[id(n.left)], vals[id(n.right)]
        return rule_smooth_outer([b, a], kids, y)
    u = vals[id(n.children[0])]
    if isinstance(n, ex.Recip):
        d = -1.0 / (u * u)
    elif isinstance(n, ex.Pow):
        d = n.k * u ** (n.k - 1)
    elif isinstance(n, ex.Exp):
        d = y
    elif isinstance(n, ex.Log):
        d = 1.0 / u
    elif isinstance(n, ex.Sin):
        d = math.cos(u)
    elif isinstance(n, ex.Cos):
        d = -math.sin(u)
    else:
        raise TypeError(f"no codifferential rule for {type(n).__name__}")
    return rule_smooth_outer([d], kids, y)


def codiff(e: ex.Expr, x) -> Codifferential:
    """Canonical codifferential of ``e`` at the point ``x``.

    Raises :class:`~codiffkit.expr.EvalDomainError` if ``e`` cannot be
    evaluated at ``x``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    dim = x.shape[0]
    vals = ex.evaluate_all(e, x)
    memo: dict[int, Codifferential] = {}
    for n in ex.walk(e):
        memo[id(n)] = _node_codiff(n, [memo[id(c)] for c in n.children], vals, dim)
    return memo[id(e)]


def compose_inner(outer: Codifferential, J) -> Codifferential:
    """Codifferential of ``T(x) = F(G(x))`` from that of ``F`` at ``G(x)``.

    ``J`` is the (d_out x d_in) Jacobian of the smooth inner map ``G``; each
    generator ``(a, v)`` becomes ``(a, J^T v)``.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.shape[0] != outer.dim:
        raise DimensionMismatch(f"Jacobian has {J.shape[0]} rows, outer dimension is {outer.dim}")
    if not np.all(np.isfinite(J)):
        raise ValueError("Jacobian entries must be finite")

    def pull(P: VPolytope) -> VPolytope:
        pts = P.points
        return VPolytope(np.hstack([pts[:, :1], pts[:, 1:] @ J]))

    return _canonical(pull(outer.hypo), pull(outer.hyper), outer.value)

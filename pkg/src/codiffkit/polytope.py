"""Convex polytopes in vertex representation.

A :class:`VPolytope` stands for the convex hull of a finite, nonempty set of
points in R^n.  For codifferentials the points are affine generators
``(a, v1, ..., vd)`` encoding ``dx -> a + <v, dx>``; coordinate 0 is the offset.

All geometric predicates (pruning, hull membership, Hausdorff distance) reduce
to one kernel: projection of a point onto a convex hull by a fully corrective
conditional-gradient (minimum-norm-point) method, see :func:`distance_to_hull`.
"""
from __future__ import annotations

import logging
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .config import FW_MAX_ITER, GEOM_TOL

log = logging.getLogger(__name__)

__all__ = [
    "DimensionMismatch",
    "VPolytope",
    "Projection",
    "minkowski_sum",
    "scale",
    "prune",
    "support",
    "distance_to_hull",
    "distance_to_hull_plus_cone",
    "hausdorff_distance",
    "origin",
]


class DimensionMismatch(ValueError):
    pass


class VPolytope:
    """Immutable finite point set standing for its convex hull."""

    __slots__ = ("_points",)

    def __init__(self, points, dim: int | None = None):
        arr = np.array(points, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("a polytope needs a nonempty 2-d array of points")
        if dim is not None and arr.shape[1] != dim:
            raise DimensionMismatch(f"points have dimension {arr.shape[1]}, expected {dim}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("polytope points must be finite")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self):
        return iter(self._points)

    def __repr__(self) -> str:
        return f"VPolytope({self._points.tolist()!r})"

    def same_vertices(self, other: "VPolytope", tol: float = 1e-12) -> bool:
        """Set equality of vertex lists up to ``tol`` (order ignored)."""
        if self.dim != other.dim or len(self) != len(other):
            return False
        a, b = self._points, other._points
        dists = np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)
        return bool(np.all(dists.min(axis=1) <= tol) and np.all(dists.min(axis=0) <= tol))

    def to_json(self) -> dict:
        return {"dim": self.dim, "points": self._points.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "VPolytope":
        return cls(obj["points"], dim=int(obj["dim"]))


def origin(dim: int) -> VPolytope:
    return VPolytope(np.zeros((1, dim)))


def _check_dims(*dims: int) -> None:
    if len(set(dims)) != 1:
        raise DimensionMismatch(f"dimension mismatch: {dims}")


class Projection(NamedTuple):
    """Result of projecting a point onto a hull (plus optional cone)."""

    dist: float
    coeffs: np.ndarray      # simplex weights over the polytope points
    point: np.ndarray       # the near-optimal point of the hull (plus cone)
    converged: bool
    ray_coeffs: np.ndarray | None = None  # nonnegative ray multipliers


def _project(V: np.ndarray, q: np.ndarray, tol: float, max_iter: int):
    V = np.ascontiguousarray(V, dtype=float)
    q = np.ascontiguousarray(q, dtype=float)
    floor = 1e-3 * tol
    dist, lam, it, converged = _kernels.min_norm_fw(V, q, tol, max_iter, floor)
    if not converged:
        log.warning("hull projection hit the %d-iteration cap; best distance %.3e", max_iter, dist)
    return float(dist), np.asarray(lam), bool(converged)


def distance_to_hull(P: VPolytope, q, tol: float = GEOM_TOL,
                     max_iter: int = FW_MAX_ITER) -> Projection:
    """Euclidean distance from ``q`` to ``conv(P)``, accurate to ``tol``.

    The returned ``coeffs`` are convex weights of the near-optimal hull point.
    If the iteration cap is reached the best bound found is returned with
    ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = np.asarray(q, dtype=float).reshape(-1)
    _check_dims(P.dim, q.shape[0])
    dist, lam, converged = _project(P.points, q, tol, max_iter)
    return Projection(dist, lam, lam @ P.points, converged)


def distance_to_hull_plus_cone(P: VPolytope, rays, q, tol: float = GEOM_TOL,
                               max_iter: int = FW_MAX_ITER) -> Projection:
    """Distance from ``q`` to ``conv(P) + cone(rays)``.

    The cone is truncated to ``{sum mu_j r_j : sum mu_j <= M}`` which makes the
    feasible set the polytope ``conv(P) + M conv({0} u rays)``; ``M`` is doubled
    until the ray budget is no longer binding.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = np.asarray(q, dtype=float).reshape(-1)
    _check_dims(P.dim, q.shape[0])
    raw = np.asarray(rays, dtype=float).reshape(-1, P.dim)
    norms = np.linalg.norm(raw, axis=1)
    nonzero = norms > 0.0
    if not nonzero.any():
        proj = distance_to_hull(P, q, tol, max_iter)
        return proj._replace(ray_coeffs=np.zeros(raw.shape[0]))
    R = raw[nonzero] / norms[nonzero][:, None]

    pts = P.points
    m, k = pts.shape[0], R.shape[0]
    budget = 2.0 * (np.linalg.norm(q) + np.abs(pts).sum(axis=1).max() + 1.0)
    for _ in range(60):
        gens = np.concatenate([pts[:, None, :], pts[:, None, :] + budget * R[None, :, :]], axis=1)
        dist, w, converged = _project(gens.reshape(m * (k + 1), P.dim), q, tol, max_iter)
        w = w.reshape(m, k + 1)
        if w[:, 1:].sum() <= 0.5:
            break
        budget *= 2.0
    lam = w.sum(axis=1)
    mu_unit = budget * w[:, 1:].sum(axis=0)
    mu = np.zeros(raw.shape[0])
    mu[nonzero] = mu_unit / norms[nonzero]
    point = lam @ pts + mu_unit @ R
    return Projection(dist, lam, point, converged, mu)


def support(P: VPolytope, g) -> tuple[float, np.ndarray]:
    """Support value ``max <p, g>`` over the vertices and the first maximiser."""
    g = np.asarray(g, dtype=float).reshape(-1)
    _check_dims(P.dim, g.shape[0])
    vals = P.points @ g
    i = int(np.argmax(vals))
    return float(vals[i]), P.points[i]


def _unique_rows(pts: np.ndarray) -> np.ndarray:
    _, idx = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(idx)]


def prune(P: VPolytope, tol: float = GEOM_TOL) -> VPolytope:
    """Extreme points of ``conv(P)``.

    A point is dropped when it lies within ``tol`` (relative to the point
    scale) of the hull of the remaining points.  Survivors keep their input
    order.
    """
    pts = _unique_rows(P.points)
    m, n = pts.shape
    eps = tol * (1.0 + float(np.abs(pts).max()))
    if m == 2 and np.linalg.norm(pts[0] - pts[1]) <= eps:
        return VPolytope(pts[:1])
    if m <= 2:
        return VPolytope(pts)
    if n == 1:
        lo, hi = int(np.argmin(pts[:, 0])), int(np.argmax(pts[:, 0]))
        if pts[hi, 0] - pts[lo, 0] <= eps:
            return VPolytope(pts[:1])
        return VPolytope(pts[sorted((lo, hi))])
    # points that uniquely maximise a coordinate (or its negative) are extreme
    keep = np.ones(m, dtype=bool)
    certain = np.zeros(m, dtype=bool)
    for col in range(n):
        for sign in (1.0, -1.0):
            vals = sign * pts[:, col]
            top = np.flatnonzero(vals >= vals.max() - eps)
            if top.size == 1:
                certain[top[0]] = True
    for i in range(m):
        if certain[i]:
            continue
        others = keep.copy()
        others[i] = False
        dist, _, _ = _project(pts[others], pts[i], eps, FW_MAX_ITER)
        if dist <= eps:
            keep[i] = False
    return VPolytope(pts[keep])


def minkowski_sum(P: VPolytope, Q: VPolytope, tol: float = GEOM_TOL) -> VPolytope:
    _check_dims(P.dim, Q.dim)
    sums = (P.points[:, None, :] + Q.points[None, :, :]).reshape(-1, P.dim)
    return prune(VPolytope(sums), tol)


def minkowski_sum_all(polys: Sequence[VPolytope], dim: int, tol: float = GEOM_TOL) -> VPolytope:
    out = origin(dim)
    for p in polys:
        out = minkowski_sum(out, p, tol)
    return out


def scale(P: VPolytope, alpha: float) -> VPolytope:
    if alpha == 0.0:
        return origin(P.dim)
    return VPolytope(alpha * P.points)


def translate(P: VPolytope, shift) -> VPolytope:
    return VPolytope(P.points + np.asarray(shift, dtype=float)[None, :])


def hausdorff_distance(P: VPolytope, Q: VPolytope, tol: float = GEOM_TOL) -> float:
    """Hausdorff distance between ``conv(P)`` and ``conv(Q)``.

    Distance to a convex set is convex, so the one-sided excess is attained at
    a vertex; only vertices are probed.
    """
    _check_dims(P.dim, Q.dim)
    worst = 0.0
    for A, B in ((P, Q), (Q, P)):
        for p in A.points:
            worst = max(worst, distance_to_hull(B, p, tol).dist)
    return worst

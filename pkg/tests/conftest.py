"""Independent oracles shared by the test modules.

None of these route through the package's projection kernel: hull
membership is an LP (scipy.optimize.linprog), hull distances are bracketed
by a duality certificate, and the benchmark functions are re-typed as
vectorised numpy lambdas.
"""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import settings
from scipy.optimize import linprog

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def lp_in_hull(points, p, tol=1e-9) -> bool:
    """True iff ``p`` is a convex combination of ``points`` (LP feasibility)."""
    pts = np.asarray(points, dtype=float)
    m = pts.shape[0]
    A_eq = np.vstack([pts.T, np.ones((1, m))])
    b_eq = np.concatenate([np.asarray(p, dtype=float), [1.0]])
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m,
                  method="highs", options={"primal_feasibility_tolerance": tol})
    return res.status == 0


def lp_extreme_points(points, tol=1e-9) -> np.ndarray:
    """Points (deduplicated, input order) not in the hull of the others."""
    pts = np.asarray(points, dtype=float)
    _, idx = np.unique(pts, axis=0, return_index=True)
    pts = pts[np.sort(idx)]
    keep = [i for i in range(len(pts))
            if len(pts) == 1 or not lp_in_hull(np.delete(pts, i, axis=0), pts[i], tol)]
    return pts[keep]


def distance_bracket(points, q, lam) -> tuple[float, float]:
    """Certified bounds on the distance from ``q`` to ``conv(points)``.

    For simplex weights ``lam`` with ``x = lam @ points - q`` the distance is at
    most ``||x||`` and at least ``min_j <x, p_j - q> / ||x||`` (the hull lies in
    that half-space).  Computed from scratch, independent of any solver.
    """
    pts = np.asarray(points, dtype=float) - np.asarray(q, dtype=float)
    lam = np.asarray(lam, dtype=float)
    assert lam.min() >= 0 and abs(lam.sum() - 1) <= 1e-12
    x = lam @ pts
    upper = float(np.linalg.norm(x))
    if upper == 0.0:
        return 0.0, 0.0
    lower = max(0.0, float((pts @ x).min()) / upper)
    return lower, upper


def same_point_sets(A, B, tol=1e-9) -> bool:
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    if A.shape != B.shape:
        return False
    return all(np.min(np.linalg.norm(B - a, axis=1)) <= tol for a in A) and \
        all(np.min(np.linalg.norm(A - b, axis=1)) <= tol for b in B)


def pair_value(hypo, hyper, dx):
    """Phi + Psi of a raw vertex pair, straight from the definition."""
    hypo, hyper = np.asarray(hypo), np.asarray(hyper)
    return float(np.max(hypo[:, 0] + hypo[:, 1:] @ dx) + np.min(hyper[:, 0] + hyper[:, 1:] @ dx))


def minkowski_raw(A, B):
    return (A[:, None, :] + B[None, :, :]).reshape(-1, A.shape[1])


def manual_sup(children, values, F):
    """Union formula for the max of several codifferentiable functions, unpruned."""
    d1 = children[0].hypo.dim
    hypo = []
    for i, c in enumerate(children):
        piece = c.hypo.points.copy()
        piece[:, 0] += values[i] - F
        for j, other in enumerate(children):
            if j != i:
                piece = minkowski_raw(piece, -other.hyper.points)
        hypo.append(piece)
    hyper = np.zeros((1, d1))
    for c in children:
        hyper = minkowski_raw(hyper, c.hyper.points)
    return np.vstack(hypo), hyper


# numpy re-typings of the shipped benchmark objectives, for grid oracles
BENCH_NUMPY = {
    "l1": lambda x1, x2: np.abs(x1) + 2 * np.abs(x2),
    "maxq2": lambda x1, x2: np.maximum(x1**2 + (x2 - 1)**2, x1**2 + (x2 + 1)**2),
    "dcline": lambda x1, x2: np.abs(x1 - 1) + np.abs(x2 + 2) - np.abs(x1 + x2),
    "quad": lambda x1, x2: (x1 - 1)**2 + 2 * (x2 + 0.5)**2,
    "chained": lambda x1, x2: np.maximum(np.abs(x1), np.abs(x2 - 2 * x1)),
    "eq_l1": lambda x1, x2: np.abs(x1) + np.abs(x2),
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


SQRT2_2 = math.sqrt(2.0) / 2.0

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from codiffkit import _kernels
from codiffkit.polytope import (
    DimensionMismatch,
    VPolytope,
    distance_to_hull,
    distance_to_hull_plus_cone,
    hausdorff_distance,
    minkowski_sum,
    origin,
    prune,
    scale,
    support,
)

from conftest import SQRT2_2, distance_bracket, lp_extreme_points, same_point_sets


def P(*pts):
    return VPolytope(np.array(pts, dtype=float))


coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def polytopes(draw, dim=None, max_points=12):
    n = draw(st.integers(1, 4)) if dim is None else dim
    m = draw(st.integers(1, max_points))
    arr = draw(hnp.arrays(np.float64, (m, n), elements=coords))
    return VPolytope(arr)


# ---------------------------------------------------------------- examples

def test_minkowski_examples():
    assert same_point_sets(minkowski_sum(P((0, 1), (0, -1)), P((0, 1), (0, -1))).points,
                           [(0, 2), (0, -2)])
    Q = P((1, 2), (3, -1), (0, 0))
    assert same_point_sets(minkowski_sum(Q, P((0, 0))).points, Q.points)
    assert same_point_sets(minkowski_sum(P((1, 0)), P((0, 1))).points, [(1, 1)])


def test_scale_examples():
    assert same_point_sets(scale(P((0, 1), (0, -1)), 2).points, [(0, 2), (0, -2)])
    Q = P((1, 2), (3, -1))
    assert same_point_sets(scale(Q, 1).points, Q.points)
    assert same_point_sets(scale(P((1, 2)), 0).points, [(0, 0)])


def test_prune_examples():
    assert same_point_sets(prune(P((0, 0), (0, 1), (0, -1))).points, [(0, 1), (0, -1)])
    assert same_point_sets(prune(P((2, 3))).points, [(2, 3)])
    square = [(0, 0), (1, 0), (1, 1), (0, 1)]
    pts = square + [(0.5, 0.5)]
    assert same_point_sets(prune(VPolytope(pts)).points, lp_extreme_points(pts))
    assert same_point_sets(prune(VPolytope(pts)).points, square)


def test_prune_keeps_input_order():
    out = prune(P((0, 1), (0, 0), (0, -1), (0, 0.5)))
    assert out.points.tolist() == [[0, 1], [0, -1]]


def test_support_examples():
    val, w = support(P((1, 0), (0, 1)), (1, 1))
    assert val == 1 and w.tolist() == [1, 0]
    assert support(P((0, 0)), (3, -7))[0] == 0
    assert support(P((0, 2), (0, -2)), (0, 1))[0] == 2


def test_distance_examples():
    assert distance_to_hull(P((1,), (-1,)), [0]).dist <= 1e-9
    assert abs(distance_to_hull(P((1, 0), (0, 1)), [0, 0]).dist - SQRT2_2) <= 1e-9
    assert abs(distance_to_hull(P((3, 4)), [0, 0]).dist - 5) <= 1e-9


def test_distance_coeffs_are_simplex_weights():
    proj = distance_to_hull(P((1, 0), (0, 1)), [0, 0])
    assert np.all(proj.coeffs >= 0) and abs(proj.coeffs.sum() - 1) <= 1e-12
    assert np.allclose(proj.coeffs, [0.5, 0.5], atol=1e-9)
    assert proj.converged


def test_cone_examples():
    assert distance_to_hull_plus_cone(P((1,)), [[-1]], [0]).dist <= 1e-9
    assert abs(distance_to_hull_plus_cone(P((1,)), np.zeros((0, 1)), [0]).dist - 1) <= 1e-9
    proj = distance_to_hull_plus_cone(P((1, 1)), [[0, -1]], [0, 0])
    assert abs(proj.dist - 1) <= 1e-9
    assert abs(proj.ray_coeffs[0] - 1) <= 1e-6


def test_cone_large_multiplier():
    # the point 0 needs a ray weight far beyond the first budget
    proj = distance_to_hull_plus_cone(P((1000.0,)), [[-1.0]], [0.0])
    assert proj.dist <= 1e-9
    assert abs(proj.ray_coeffs[0] - 1000.0) <= 1e-3


def test_hausdorff_examples():
    assert abs(hausdorff_distance(P((-1,), (1,)), P((-2,), (2,))) - 1) <= 1e-9
    Q = P((0, 0), (1, 3), (2, -1))
    assert hausdorff_distance(Q, Q) <= 1e-12
    assert abs(hausdorff_distance(P((0, 0)), P((3, 4))) - 5) <= 1e-9


# ---------------------------------------------------------------- errors and I/O

def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        minkowski_sum(P((0, 1)), P((0, 1, 2)))
    with pytest.raises(DimensionMismatch):
        distance_to_hull(P((0, 1)), [0, 0, 0])


def test_empty_and_nonfinite_rejected():
    with pytest.raises(ValueError):
        VPolytope(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        VPolytope([[math.nan, 0.0]])


def test_points_are_read_only():
    Q = P((0, 1))
    with pytest.raises(ValueError):
        Q.points[0, 0] = 5.0


def test_json_round_trip():
    Q = P((0.1, -2.5), (3.0, 1e-17))
    R = VPolytope.from_json(Q.to_json())
    assert R.dim == 2 and np.array_equal(R.points, Q.points)
    assert origin(3).to_json() == {"dim": 3, "points": [[0.0, 0.0, 0.0]]}


# ---------------------------------------------------------------- properties

@given(polytopes())
def test_prune_idempotent(Q):
    once = prune(Q)
    assert same_point_sets(prune(once).points, once.points, tol=0)


@given(polytopes(), st.data())
def test_prune_preserves_support(Q, data):
    pruned = prune(Q)
    g = data.draw(hnp.arrays(np.float64, (Q.dim,), elements=coords))
    scale_ = 1.0 + np.abs(Q.points).max()
    assert abs(support(Q, g)[0] - support(pruned, g)[0]) <= 1e-8 * scale_ * (1 + np.abs(g).sum())


@given(polytopes(dim=2, max_points=9))
def test_prune_matches_lp_oracle(Q):
    # well-separated integer grids keep the LP and the kernel away from ties
    pts = np.round(Q.points)
    assert same_point_sets(prune(VPolytope(pts)).points, lp_extreme_points(pts))


@given(polytopes(dim=3, max_points=8), polytopes(dim=3, max_points=8), st.data())
def test_minkowski_support_identity(A, B, data):
    g = data.draw(hnp.arrays(np.float64, (3,), elements=coords))
    lhs = support(minkowski_sum(A, B), g)[0]
    rhs = support(A, g)[0] + support(B, g)[0]
    assert abs(lhs - rhs) <= 1e-8 * (1 + abs(rhs))


@given(polytopes(), st.data())
def test_convex_combination_has_zero_distance(Q, data):
    w = data.draw(hnp.arrays(np.float64, (len(Q),), elements=st.floats(0, 1)))
    if w.sum() == 0:
        w = np.ones(len(Q))
    q = (w / w.sum()) @ Q.points
    assert distance_to_hull(Q, q).dist <= 1e-9 * (1 + np.abs(Q.points).max())


@given(polytopes(max_points=8), st.data())
def test_distance_is_certified(Q, data):
    q = data.draw(hnp.arrays(np.float64, (Q.dim,), elements=coords))
    proj = distance_to_hull(Q, q)
    lower, upper = distance_bracket(Q.points, q, proj.coeffs)
    assert abs(upper - proj.dist) <= 1e-9 * (1 + upper)
    assert upper - lower <= 1e-8 * (1 + np.abs(Q.points).max() + np.abs(q).max())


@given(polytopes(dim=2, max_points=6), polytopes(dim=2, max_points=6),
       polytopes(dim=2, max_points=6))
def test_hausdorff_is_a_metric(A, B, C):
    A, B, C = prune(A), prune(B), prune(C)
    ab, ba = hausdorff_distance(A, B), hausdorff_distance(B, A)
    assert abs(ab - ba) <= 1e-9
    assert ab <= hausdorff_distance(A, C) + hausdorff_distance(C, B) + 1e-9


# ---------------------------------------------------------------- compiled vs pure

@pytest.mark.skipif(_kernels.compiled_min_norm_fw is None, reason="compiled kernel not built")
def test_compiled_and_python_kernels_agree():
    rng = np.random.default_rng(7)
    for _ in range(200):
        m, n = rng.integers(1, 30), rng.integers(1, 6)
        V = rng.normal(size=(m, n))
        q = rng.normal(size=n) * 2
        a = _kernels.compiled_min_norm_fw(V, q, 1e-10, 10000, 1e-13)
        b = _kernels.python_min_norm_fw(V, q, 1e-10, 10000, 1e-13)
        assert abs(a[0] - b[0]) <= 1e-12
        # weights need not be unique; the nearest point is
        assert np.allclose(a[1] @ V, b[1] @ V, atol=1e-10)
        assert a[3] == b[3]

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from codiffkit import expr as ex
from codiffkit.codiff import (
    Codifferential, codiff, compose_inner, normalize, rule_scale, rule_sum,
)
from codiffkit.descent import benchmark_suite
from codiffkit.polytope import VPolytope, prune, scale

from conftest import BENCH_NUMPY, manual_sup, pair_value, same_point_sets, unit


def V(*pts):
    return VPolytope(np.array(pts, dtype=float))


# ---------------------------------------------------------------- fixtures

def test_smooth_square():
    c = codiff(ex.parse("x1^2", 1), [3.0])
    assert same_point_sets(c.hypo.points, [(0, 6)])
    assert same_point_sets(c.hyper.points, [(0, 0)])


def test_abs_at_kink():
    c = codiff(ex.parse("abs(x1)", 1), [0.0])
    assert same_point_sets(c.hypo.points, [(0, 1), (0, -1)])
    assert same_point_sets(c.hyper.points, [(0, 0)])


def test_max_with_inactive_branch():
    c = codiff(ex.parse("max(x1, -x1)", 1), [1.0])
    assert same_point_sets(c.hypo.points, [(0, 1), (-2, -1)])
    assert same_point_sets(c.hyper.points, [(0, 0)])


def test_l1_sum_at_origin():
    e = ex.parse("abs(x1)+abs(x2)", 2)
    c = codiff(e, [0.0, 0.0])
    assert same_point_sets(c.hypo.points, [(0, a, b) for a in (1, -1) for b in (1, -1)])
    assert same_point_sets(c.hyper.points, [(0, 0, 0)])
    # brute-force directional derivatives over 16 compass directions
    f = lambda x: abs(x[0]) + abs(x[1])
    for k in range(16):
        g = np.array([np.cos(k * np.pi / 8), np.sin(k * np.pi / 8)])
        t = 1e-7
        assert abs(c.expansion(g) - (f(t * g) / t)) <= 1e-9


def test_min_puts_kinks_in_hyper():
    c = codiff(ex.parse("min(x1, -x1)", 1), [0.0])
    assert same_point_sets(c.hypo.points, [(0, 0)])
    assert same_point_sets(c.hyper.points, [(0, 1), (0, -1)])


def test_product_and_reciprocal_gradients():
    c = codiff(ex.parse("x1*x2", 2), [2.0, 3.0])
    assert same_point_sets(c.hypo.points, [(0, 3, 2)])
    c = codiff(ex.parse("1/x1", 1), [2.0])
    assert same_point_sets(c.hypo.points, [(0, -0.25)])


def test_transcendental_gradients():
    x = 0.7
    for text, grad in [("exp(x1)", np.exp(x)), ("log(x1)", 1 / x), ("sin(x1)", np.cos(x)),
                       ("cos(x1)", -np.sin(x)), ("x1^-3", -3 * x**-4)]:
        c = codiff(ex.parse(text, 1), [x])
        assert c.hypo.points[0, 1] == pytest.approx(grad, rel=1e-14)


def test_domain_error_propagates():
    with pytest.raises(ex.EvalDomainError):
        codiff(ex.parse("log(x1)", 1), [0.0])


# ---------------------------------------------------------------- compose_inner

def test_compose_inner_examples():
    outer = codiff(ex.parse("abs(x1)", 1), [0.0])
    got = compose_inner(outer, [[2.0]])
    want = codiff(ex.parse("abs(2*x1)", 1), [0.0])
    assert same_point_sets(got.hypo.points, [(0, 2), (0, -2)])
    assert same_point_sets(got.hypo.points, want.hypo.points)
    same = compose_inner(outer, np.eye(1))
    assert same_point_sets(same.hypo.points, outer.hypo.points)
    flat = compose_inner(codiff(ex.parse("abs(x1)+x2", 2), [0.0, 1.0]), np.zeros((2, 3)))
    assert same_point_sets(flat.hypo.points, [(0, 0, 0, 0)])
    assert same_point_sets(flat.hyper.points, [(0, 0, 0, 0)])


def test_compose_inner_matches_chain():
    # |x1 - x2| at (1, 1) is |.| at 0 composed with G(x) = x1 - x2
    outer = codiff(ex.parse("abs(x1)", 1), [0.0])
    got = compose_inner(outer, [[1.0, -1.0]])
    want = codiff(ex.parse("abs(x1 - x2)", 2), [1.0, 1.0])
    assert same_point_sets(got.hypo.points, want.hypo.points)


# ---------------------------------------------------------------- normalize

def test_normalize_examples():
    c, drift = normalize(V((0, 1), (0, -1)), V((0, 0)))
    assert drift == 0 and same_point_sets(c.hypo.points, [(0, 1), (0, -1)])
    c, drift = normalize(V((-1, 1), (-3, -1)), V((0, 0)))
    assert drift == 1
    assert same_point_sets(c.hypo.points, [(0, 1), (-2, -1)])
    c, _ = normalize(V((0, 0)), V((2, 1), (5, -1)))
    assert same_point_sets(c.hyper.points, [(0, 1), (3, -1)])


pairs = st.integers(1, 3).flatmap(lambda d: st.tuples(
    hnp.arrays(np.float64, st.tuples(st.integers(1, 5), st.just(d + 1)),
               elements=st.floats(-3, 3)),
    hnp.arrays(np.float64, st.tuples(st.integers(1, 5), st.just(d + 1)),
               elements=st.floats(-3, 3)),
    hnp.arrays(np.float64, (d,), elements=st.floats(-2, 2)),
))


@given(pairs)
def test_normalization_preserves_values(data):
    U, W, dx = data
    # put the raw pair in the class with Phi(0) + Psi(0) = 0
    U = U.copy()
    U[:, 0] -= U[:, 0].max() + W[:, 0].min()
    for absorb in (True, False):
        c, drift = normalize(VPolytope(U), VPolytope(W), absorb=absorb)
        assert drift <= 1e-12
        assert abs(c.expansion(dx) - pair_value(U, W, dx)) <= 1e-9
        assert abs(c.hypo.points[:, 0].max()) <= 1e-15
        assert abs(c.hyper.points[:, 0].min()) <= 1e-15


def test_json_round_trip():
    c = codiff(ex.parse("max(x1, x2^2) - abs(x2)", 2), [0.5, 0.0])
    again = Codifferential.from_json(c.to_json())
    assert np.array_equal(again.hypo.points, c.hypo.points)
    assert np.array_equal(again.hyper.points, c.hyper.points)
    assert c.to_json()["dim"] == 2


# ---------------------------------------------------------------- invariants

BENCH = [b for b in benchmark_suite() if b.problem.dim == 2]


@pytest.mark.parametrize("b", BENCH, ids=lambda b: b.name)
def test_expansion_property(b):
    rng = np.random.default_rng(1)
    pl = ex.is_piecewise_linear(b.problem.objective)
    for _ in range(10):
        x = rng.uniform(-3, 3, size=2)
        dx = unit(rng.normal(size=2))
        c = codiff(b.problem.objective, x)
        fx = ex.evaluate(b.problem.objective, x)
        alpha = 1e-4
        r = abs(ex.evaluate(b.problem.objective, x + alpha * dx) - fx - c.expansion(alpha * dx))
        if pl:
            assert r <= 1e-12 * (1 + abs(fx))
        else:
            # curvature of these quadratics is at most 4
            assert r / alpha <= 1e-3 * (1 + 4.0)


@pytest.mark.parametrize("b", BENCH, ids=lambda b: b.name)
def test_sum_rule_consistency(b):
    rng = np.random.default_rng(2)
    e1 = b.problem.objective
    e2 = ex.parse("max(x1 - x2, 0.5*x2) + abs(x1 + 1)", 2)
    for _ in range(5):
        x = rng.uniform(-2, 2, size=2)
        whole = codiff(ex.Add(e1, e2), x)
        parts = rule_sum(codiff(e1, x), codiff(e2, x))
        for dx in rng.normal(size=(20, 2)):
            assert abs(whole.expansion(dx) - parts.expansion(dx)) <= 1e-10 * (1 + np.abs(dx).sum())


@pytest.mark.parametrize("text,x", [
    ("abs(x1) + 2*abs(x2)", [0.0, 0.0]),
    ("min(x1, -x1) + abs(x2)", [0.0, 0.0]),
    ("max(x1^2, x2) - abs(x1 - x2)", [1.0, 1.0]),
])
def test_scale_swaps_halves(text, x):
    c = codiff(ex.parse(text, 2), x)
    for alpha in (-1.0, -2.5):
        s = rule_scale(c, alpha, absorb=False)
        assert same_point_sets(prune(s.hypo).points, prune(scale(c.hyper, alpha)).points)
        assert same_point_sets(prune(s.hyper).points, prune(scale(c.hypo, alpha)).points)
        # the canonical form may fold a singleton hyper, but the function is the same
        t = rule_scale(c, alpha)
        for dx in np.random.default_rng(0).normal(size=(20, 2)):
            assert abs(t.expansion(dx) - alpha * c.expansion(dx)) <= 1e-12


@pytest.mark.parametrize("b", BENCH, ids=lambda b: b.name)
def test_lipschitz_bound_locally(b):
    rng = np.random.default_rng(3)
    f = BENCH_NUMPY[b.name]
    for _ in range(5):
        x = rng.uniform(-3, 3, size=2)
        c = codiff(b.problem.objective, x)
        L = c.lipschitz_bound()
        r = 1e-3
        dx = rng.normal(size=(200, 2))
        dx *= (r * rng.uniform(size=200) / np.linalg.norm(dx, axis=1))[:, None]
        lhs = np.abs(f(x[0] + dx[:, 0], x[1] + dx[:, 1]) - f(x[0], x[1]))
        assert np.all(lhs <= (L + 1e-2) * np.linalg.norm(dx, axis=1) + 1e-14)


# ---------------------------------------------------------------- rule cross-checks

def _check_functions(got, want_fn, dim, rng, tol=1e-10):
    for dx in rng.normal(size=(100, dim)):
        assert abs(got.expansion(dx) - want_fn(dx)) <= tol * (1 + np.abs(dx).sum())


CHILDREN = ["abs(x1) - x2", "min(x1, x2^2)", "max(x1 + x2, -x1, 0.5)", "x1*x2 + 1"]
POINTS = [np.array([0.0, 0.0]), np.array([1.0, 1.0]), np.array([0.3, -1.2])]


@pytest.mark.parametrize("s1,s2", list(itertools.combinations(CHILDREN, 2)))
def test_rules_against_manual_formulas(s1, s2):
    rng = np.random.default_rng(4)
    e1, e2 = ex.parse(s1, 2), ex.parse(s2, 2)
    for x in POINTS:
        c1, c2 = codiff(e1, x), codiff(e2, x)
        f1, f2 = ex.evaluate(e1, x), ex.evaluate(e2, x)
        E1, E2 = c1.expansion, c2.expansion
        _check_functions(codiff(ex.Add(e1, e2), x), lambda d: E1(d) + E2(d), 2, rng)
        _check_functions(codiff(ex.Mul(ex.Const(-3.0), e1), x), lambda d: -3 * E1(d), 2, rng)
        _check_functions(codiff(ex.Mul(e1, e2), x), lambda d: f2 * E1(d) + f1 * E2(d), 2, rng)
        hypo, hyper = manual_sup([c1, c2], [f1, f2], max(f1, f2))
        _check_functions(codiff(ex.Max((e1, e2)), x),
                         lambda d: pair_value(hypo, hyper, d), 2, rng)
        if f1 != 0:
            _check_functions(codiff(ex.Recip(e1), x), lambda d: -E1(d) / f1**2, 2, rng)
        a = abs(f1)
        _check_functions(codiff(ex.Abs(e1), x),
                         lambda d: max(f1 + E1(d), -f1 - E1(d)) - a, 2, rng)

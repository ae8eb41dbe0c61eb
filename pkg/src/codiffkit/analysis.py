"""Directional information extracted from codifferentials, plus the oracles
that check the defining expansion numerically."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from .codiff import Codifferential, codiff
from .config import GEOM_TOL
from .polytope import VPolytope, hausdorff_distance, prune

__all__ = [
    "Quasidifferential",
    "dir_deriv",
    "quasidiff",
    "expansion_residual",
    "residual_decays",
    "one_sided_difference",
    "continuity_probe",
    "DEFAULT_ALPHAS",
]

DEFAULT_ALPHAS = tuple(10.0 ** -k for k in range(1, 7))


@dataclass(frozen=True)
class Quasidifferential:
    sub: VPolytope
    sup: VPolytope

    def derivative(self, g) -> float:
        """``max_{v in sub} <v, g> + min_{w in sup} <w, g>``."""
        g = np.asarray(g, dtype=float)
        return float((self.sub.points @ g).max() + (self.sup.points @ g).min())


def dir_deriv(c: Codifferential, g, tol: float | None = None) -> float:
    """Directional derivative ``F'(x; g)`` from the active generators of ``c``.

    Inactive vertices (``a < 0``) describe the function away from ``x`` and
    must not enter the derivative.
    """
    g = np.asarray(g, dtype=float).reshape(-1)
    return float((c.active_hypo(tol) @ g).max() + (c.active_hyper(tol) @ g).min())


def quasidiff(c: Codifferential, tol: float | None = None) -> Quasidifferential:
    return Quasidifferential(prune(VPolytope(c.active_hypo(tol))),
                             prune(VPolytope(c.active_hyper(tol))))


def expansion_residual(e: ex.Expr, x, dx, alphas: Sequence[float] = DEFAULT_ALPHAS,
                       c: Codifferential | None = None) -> list[tuple[float, float]]:
    """Pairs ``(alpha, r(alpha) / alpha)`` with
    ``r(alpha) = |F(x + alpha dx) - F(x) - Phi(alpha dx) - Psi(alpha dx)|``.

    ``Phi`` and ``Psi`` use the full vertex sets, offsets included.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    dx = np.asarray(dx, dtype=float).reshape(-1)
    if c is None:
        c = codiff(e, x)
    fx = ex.evaluate(e, x)
    out = []
    for alpha in alphas:
        step = alpha * dx
        r = abs(ex.evaluate(e, x + step) - fx - c.expansion(step))
        out.append((float(alpha), r / alpha))
    return out


def residual_decays(table: Sequence[tuple[float, float]], fx: float,
                    rel: float = 1e-3) -> bool:
    """Acceptance rule for a residual table.

    The last ratio must be at most ``rel * (1 + |F(x)|)`` and no larger than
    the first one (up to rounding); intermediate bumps are tolerated.
    """
    ratios = [r for _, r in table]
    bound = rel * (1.0 + abs(fx))
    return ratios[-1] <= bound and ratios[-1] <= ratios[0] + 1e-9 * (1.0 + abs(fx))


def one_sided_difference(e: ex.Expr, x, g,
                         alphas: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)) -> float:
    """Finite-difference estimate of ``F'(x; g)``.

    Quotients ``(F(x + a g) - F(x)) / a`` along the grid, Richardson
    extrapolated from the two smallest steps (first-order error model).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    fx = ex.evaluate(e, x)
    q = [(ex.evaluate(e, x + a * g) - fx) / a for a in alphas]
    a1, a2 = alphas[-2], alphas[-1]
    ratio = a1 / a2
    return float((ratio * q[-1] - q[-2]) / (ratio - 1.0))


def continuity_probe(e: ex.Expr, x, radius: float, samples: int = 32,
                     seed: int = 0, tol: float = GEOM_TOL) -> float:
    """Largest Hausdorff distance between the codifferential at ``x`` and at
    sampled points of the closed ball of the given radius.

    A diagnostic: at points where the active set changes it need not vanish.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x.shape[0]
    rng = np.random.default_rng(seed)
    cx = codiff(e, x)
    pts = [x + radius * s * np.eye(d)[i] for i in range(d) for s in (1.0, -1.0)]
    for _ in range(samples):
        u = rng.normal(size=d)
        u /= np.linalg.norm(u)
        pts.append(x + radius * rng.uniform() ** (1.0 / d) * u)
    worst = 0.0
    for y in pts:
        cy = codiff(e, y)
        worst = max(worst, hausdorff_distance(cx.hypo, cy.hypo, tol),
                    hausdorff_distance(cx.hyper, cy.hyper, tol))
    return worst

"""Pure-Python minimum-norm-point projection onto a convex hull.

Reference twin of the compiled ``_fw_kernel`` module; used when the extension
is not built or when ``CODIFF_PURE_PYTHON`` is set.  Both follow the same
arithmetic step by step, so they agree to rounding.
"""
import math

import numpy as np


def _affine_min(P, S, out):
    """Weights ``alpha`` (summing to one) of the min-norm point of ``aff(P[S])``.

    Modified Gram-Schmidt, applied twice, on the directions ``P[S[j]] - P[S[0]]``.
    Returns False when those directions are numerically dependent.
    """
    k = len(S)
    if k == 1:
        out[0] = 1.0
        return True
    p0 = P[S[0]]
    n = P.shape[1]
    Q = np.zeros((k - 1, n))
    R = np.zeros((k - 1, k - 1))
    for j in range(1, k):
        v = P[S[j]] - p0
        scale = math.sqrt(float(v @ v))
        for _ in range(2):
            for i in range(j - 1):
                h = float(Q[i] @ v)
                R[i, j - 1] += h
                v = v - h * Q[i]
        nv = math.sqrt(float(v @ v))
        if nv <= 1e-12 * scale or nv == 0.0:
            return False
        R[j - 1, j - 1] = nv
        Q[j - 1] = v / nv
    # R beta = -Q p0
    rhs = -(Q @ p0)
    beta = np.zeros(k - 1)
    for i in range(k - 2, -1, -1):
        s = rhs[i]
        for j in range(i + 1, k - 1):
            s -= R[i, j] * beta[j]
        beta[i] = s / R[i, i]
    out[0] = 1.0 - float(beta.sum())
    out[1:k] = beta
    return True


def min_norm_fw(V, q, tol, max_iter, floor):
    """Minimise ``0.5 * ||V.T @ lam - q||**2`` over the probability simplex.

    Returns ``(dist, lam, iterations, converged)``.  Each major step adds the
    Frank-Wolfe vertex to the active set and re-solves the problem exactly on
    the affine hull of the active set, stepping back towards feasibility
    whenever the affine solution leaves the simplex.  Stops once the
    Frank-Wolfe gap certifies ``dist`` to within ``tol`` of the optimum, or when
    ``dist <= floor``.
    """
    P = np.ascontiguousarray(V, dtype=float) - np.asarray(q, dtype=float)[None, :]
    m = P.shape[0]
    lam = np.zeros(m)
    start = int(np.argmin((P * P).sum(axis=1)))
    lam[start] = 1.0
    S = [start]
    x = P[start].copy()
    alpha = np.zeros(m + 1)

    it = 0
    converged = False
    while True:
        dist = math.sqrt(float(x @ x))
        if dist <= floor:
            converged = True
            break
        c = P @ x
        s = int(np.argmin(c))
        gap = float(x @ x) - c[s]
        if gap <= 0.5 * tol * tol or gap <= 0.5 * tol * dist:
            converged = True
            break
        if it >= max_iter:
            break
        if s in S:
            # the affine solution is already optimal up to rounding
            converged = True
            break
        S.append(s)
        while True:
            it += 1
            if not _affine_min(P, S, alpha):
                converged = True
                break
            if all(alpha[j] > 0.0 for j in range(len(S))):
                for j, idx in enumerate(S):
                    lam[idx] = alpha[j]
                break
            # step from lam towards alpha until a weight hits zero
            theta, block = 1.0, -1
            for j, idx in enumerate(S):
                if alpha[j] <= 0.0:
                    t = lam[idx] / (lam[idx] - alpha[j])
                    if t < theta:
                        theta, block = t, idx
            keep = []
            for j, idx in enumerate(S):
                lam[idx] = (1.0 - theta) * lam[idx] + theta * alpha[j]
                if idx == block or lam[idx] <= 0.0:
                    lam[idx] = 0.0
                else:
                    keep.append(idx)
            S = keep
            if it >= max_iter:
                break
        x = lam[S] @ P[S]
        if converged:
            dist = math.sqrt(float(x @ x))
            break

    np.maximum(lam, 0.0, out=lam)
    total = lam.sum()
    if total > 0.0:
        lam /= total
    return dist, lam, it, converged

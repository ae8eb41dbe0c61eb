# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled minimum-norm-point projection of a point onto a convex hull.

Mirrors :func:`codiffkit._fw_fallback.min_norm_fw` step for step.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef bint _affine_min(double[:, ::1] P, Py_ssize_t[::1] S, Py_ssize_t k, double[:, ::1] Q,
                      double[:, ::1] R, double[::1] v, double[::1] beta,
                      double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = P.shape[1]
    cdef Py_ssize_t i, j, r, p
    cdef double h, nv, scale, s
    if k == 1:
        out[0] = 1.0
        return True
    for i in range(k - 1):
        for j in range(k - 1):
            R[i, j] = 0.0
    for j in range(1, k):
        scale = 0.0
        for r in range(n):
            v[r] = P[S[j], r] - P[S[0], r]
            scale += v[r] * v[r]
        scale = sqrt(scale)
        for p in range(2):
            for i in range(j - 1):
                h = 0.0
                for r in range(n):
                    h += Q[i, r] * v[r]
                R[i, j - 1] += h
                for r in range(n):
                    v[r] = v[r] - h * Q[i, r]
        nv = 0.0
        for r in range(n):
            nv += v[r] * v[r]
        nv = sqrt(nv)
        if nv <= 1e-12 * scale or nv == 0.0:
            return False
        R[j - 1, j - 1] = nv
        for r in range(n):
            Q[j - 1, r] = v[r] / nv
    for i in range(k - 2, -1, -1):
        s = 0.0
        for r in range(n):
            s -= Q[i, r] * P[S[0], r]
        for j in range(i + 1, k - 1):
            s -= R[i, j] * beta[j]
        beta[i] = s / R[i, i]
    s = 0.0
    for i in range(k - 1):
        s += beta[i]
    out[0] = 1.0 - s
    for i in range(k - 1):
        out[i + 1] = beta[i]
    return True


def min_norm_fw(const double[:, ::1] V, const double[::1] q, double tol, Py_ssize_t max_iter,
                double floor):
    cdef Py_ssize_t m = V.shape[0]
    cdef Py_ssize_t n = V.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lam_arr = np.zeros(m)
    cdef double[:, ::1] P = np.empty((m, n))
    cdef double[::1] lam = lam_arr
    cdef double[::1] x = np.zeros(n)
    cdef double[::1] alpha = np.zeros(n + 2)
    cdef double[:, ::1] Q = np.zeros((n + 1, n))
    cdef double[:, ::1] R = np.zeros((n + 1, n + 1))
    cdef double[::1] v = np.zeros(n)
    cdef double[::1] beta = np.zeros(n + 1)
    cdef Py_ssize_t[::1] S = np.zeros(n + 2, dtype=np.intp)
    cdef Py_ssize_t ns, i, j, r, s, idx, block, nkeep, start, it = 0
    cdef double best, acc, dist = 0.0, xx, cmin, gap, theta, t, total
    cdef bint converged = False, found, positive

    start = 0
    best = -1.0
    for i in range(m):
        acc = 0.0
        for r in range(n):
            P[i, r] = V[i, r] - q[r]
            acc += P[i, r] * P[i, r]
        if best < 0.0 or acc < best:
            best = acc
            start = i
    lam[start] = 1.0
    S[0] = start
    ns = 1
    for r in range(n):
        x[r] = P[start, r]

    while True:
        xx = 0.0
        for r in range(n):
            xx += x[r] * x[r]
        dist = sqrt(xx)
        if dist <= floor:
            converged = True
            break
        s = 0
        cmin = 0.0
        for i in range(m):
            acc = 0.0
            for r in range(n):
                acc += P[i, r] * x[r]
            if i == 0 or acc < cmin:
                cmin = acc
                s = i
        gap = xx - cmin
        if gap <= 0.5 * tol * tol or gap <= 0.5 * tol * dist:
            converged = True
            break
        if it >= max_iter:
            break
        found = False
        for j in range(ns):
            if S[j] == s:
                found = True
        if found or ns > n + 1:
            # the affine solution is already optimal up to rounding
            converged = True
            break
        S[ns] = s
        ns += 1
        while True:
            it += 1
            if not _affine_min(P, S, ns, Q, R, v, beta, alpha):
                converged = True
                break
            positive = True
            for j in range(ns):
                if not alpha[j] > 0.0:
                    positive = False
            if positive:
                for j in range(ns):
                    lam[S[j]] = alpha[j]
                break
            # step from lam towards alpha until a weight hits zero
            theta = 1.0
            block = -1
            for j in range(ns):
                if alpha[j] <= 0.0:
                    idx = S[j]
                    t = lam[idx] / (lam[idx] - alpha[j])
                    if t < theta:
                        theta = t
                        block = idx
            nkeep = 0
            for j in range(ns):
                idx = S[j]
                lam[idx] = (1.0 - theta) * lam[idx] + theta * alpha[j]
                if idx == block or lam[idx] <= 0.0:
                    lam[idx] = 0.0
                else:
                    S[nkeep] = idx
                    nkeep += 1
            ns = nkeep
            if it >= max_iter:
                break
        for r in range(n):
            x[r] = 0.0
        for j in range(ns):
            for r in range(n):
                x[r] += lam[S[j]] * P[S[j], r]
        if converged:
            xx = 0.0
            for r in range(n):
                xx += x[r] * x[r]
            dist = sqrt(xx)
            break

    total = 0.0
    for i in range(m):
        if lam[i] < 0.0:
            lam[i] = 0.0
        total += lam[i]
    if total > 0.0:
        for i in range(m):
            lam[i] /= total
    return dist, lam_arr, it, converged

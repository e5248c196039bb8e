"""Compiled kernels for weighted lasso coordinate descent on CSC matrices."""

import numpy as np
from numba import njit


@njit(cache=True)
def col_weighted_sq(indptr, indices, data, w, n):
    q = indptr.size - 1
    out = np.zeros(q)
    for j in range(q):
        s = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            s += w[indices[k]] * data[k] * data[k]
        out[j] = s / n
    return out


@njit(cache=True)
def csc_tmatvec(indptr, indices, data, v):
    q = indptr.size - 1
    out = np.zeros(q)
    for j in range(q):
        s = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            s += data[k] * v[indices[k]]
        out[j] = s
    return out


@njit(cache=True)
def _sweep(indptr, indices, data, w, res, beta, b0, cols, xwx, lam, n, intercept, wsum):
    biggest = 0.0
    if intercept:
        s = 0.0
        for i in range(res.size):
            s += w[i] * res[i]
        d0 = s / wsum
        if d0 != 0.0:
            b0 += d0
            for i in range(res.size):
                res[i] -= d0
            biggest = d0 * d0 * wsum / n
    for a in range(cols.size):
        j = cols[a]
        if xwx[j] <= 0.0:
            continue
        g = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            i = indices[k]
            g += w[i] * data[k] * res[i]
        g = g / n + xwx[j] * beta[j]
        if g > lam:
            new = (g - lam) / xwx[j]
        elif g < -lam:
            new = (g + lam) / xwx[j]
        else:
            new = 0.0
        d = new - beta[j]
        if d != 0.0:
            beta[j] = new
            for k in range(indptr[j], indptr[j + 1]):
                res[indices[k]] -= data[k] * d
            change = d * d * xwx[j]
            if change > biggest:
                biggest = change
    return b0, biggest


@njit(cache=True)
def cd_sweeps(indptr, indices, data, w, res, beta, b0, active, xwx, lam, n,
              intercept, tol, max_sweeps):
    """Coordinate descent on ``(1/2n) sum w res^2 + lam |beta|_1``.

    ``res`` holds the working residual ``z - b0 - X beta`` and is updated in
    place together with ``beta``. Sweeps over ``active`` alternate with
    inner sweeps over its currently nonzero coordinates. Returns the new
    intercept and the number of sweeps used (more than ``max_sweeps``
    signals non-convergence).
    """
    wsum = 0.0
    for i in range(res.size):
        wsum += w[i]
    sweeps = 0
    while sweeps < max_sweeps:
        b0, big = _sweep(indptr, indices, data, w, res, beta, b0, active, xwx, lam, n, intercept, wsum)
        sweeps += 1
        if big < tol:
            return b0, sweeps
        m = 0
        for a in range(active.size):
            if beta[active[a]] != 0.0:
                m += 1
        nz = np.empty(m, dtype=active.dtype)
        m = 0
        for a in range(active.size):
            if beta[active[a]] != 0.0:
                nz[m] = active[a]
                m += 1
        while sweeps < max_sweeps:
            b0, big = _sweep(indptr, indices, data, w, res, beta, b0, nz, xwx, lam, n, intercept, wsum)
            sweeps += 1
            if big < tol:
                break
    return b0, max_sweeps + 1

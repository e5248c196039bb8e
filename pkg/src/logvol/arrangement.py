"""Central hyperplane arrangements defined by the rows of a design matrix.

Each nonzero row ``x_i`` defines the hyperplane ``x_i beta = 0``. For a
rank-``q`` design the arrangement is essential, so every chamber is a
pointed polyhedral cone generated by arrangement rays (one-dimensional
intersections of hyperplanes). Chambers are enumerated locally around each
ray and then split into simplicial cones, which the volume engine
integrates one by one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .linalg import as_array

#: Absolute tolerance on ``a_i . r`` for unit normals and unit rays.
ZERO_TOL = 1e-9

#: Refuse local enumeration around rays lying on more hyperplanes than this.
MAX_LOCAL_HYPERPLANES = 16


@dataclass(frozen=True)
class Chamber:
    signs: tuple  # sign of each unit normal on the chamber interior
    rays: np.ndarray  # (k, q) unit extreme rays, k >= q


def unit_normals(X, tol: float = ZERO_TOL):
    """Distinct hyperplane normals of the nonzero rows of ``X``.

    Returns ``(A, row_map, row_sign)`` where ``A`` holds unit normals and
    row ``i`` of ``X`` is a positive multiple of ``row_sign[i] * A[row_map[i]]``
    (``row_map[i] = -1`` for zero rows).
    """
    X = as_array(X)
    n = X.shape[0]
    row_map = np.full(n, -1, dtype=np.intp)
    row_sign = np.zeros(n)
    normals: list[np.ndarray] = []
    for i in range(n):
        norm = np.linalg.norm(X[i])
        if norm == 0.0:
            continue
        a = X[i] / norm
        lead = a[np.flatnonzero(np.abs(a) > tol)[0]]
        sgn = 1.0 if lead > 0 else -1.0
        a = sgn * a
        for k, b in enumerate(normals):
            if np.max(np.abs(a - b)) <= tol:
                row_map[i], row_sign[i] = k, sgn
                break
        else:
            row_map[i], row_sign[i] = len(normals), sgn
            normals.append(a)
    q = X.shape[1]
    return np.array(normals).reshape(-1, q), row_map, row_sign


def _null_vector(B, q: int, tol: float):
    if B.shape[0] == 0:
        return np.ones(1) if q == 1 else None
    _, s, vt = np.linalg.svd(B)
    if s.size < q - 1 or s[q - 2] <= tol * max(s[0], 1.0):
        return None
    return vt[-1]


def arrangement_rays(A, tol: float = ZERO_TOL) -> np.ndarray:
    """Unit rays (one per line, canonical sign) of the arrangement with normals ``A``."""
    A = np.asarray(A, dtype=float)
    m, q = A.shape
    seen, rays = set(), []
    for sub in itertools.combinations(range(m), q - 1):
        v = _null_vector(A[list(sub)], q, tol)
        if v is None:
            continue
        zero = frozenset(np.flatnonzero(np.abs(A @ v) <= tol).tolist())
        if zero in seen:
            continue
        seen.add(zero)
        nz = np.flatnonzero(np.abs(v) > tol)
        if v[nz[0]] < 0:
            v = -v
        rays.append(v / np.linalg.norm(v))
    return np.array(rays).reshape(-1, q)


def chambers(A, rays=None, tol: float = ZERO_TOL) -> list[Chamber]:
    """All chambers of the arrangement, in a deterministic order."""
    A = np.asarray(A, dtype=float)
    m, q = A.shape
    if rays is None:
        rays = arrangement_rays(A, tol)
    both = np.concatenate([rays, -rays]) if len(rays) else rays
    P = both @ A.T  # (2r, m)
    found: dict[tuple, Chamber] = {}
    for k in range(len(both)):
        z = np.flatnonzero(np.abs(P[k]) <= tol)
        if len(z) > MAX_LOCAL_HYPERPLANES:
            raise ValueError(f"{len(z)} hyperplanes meet along one ray; arrangement too degenerate")
        base = np.sign(P[k])
        for eps in itertools.product((1.0, -1.0), repeat=len(z)):
            sig = base.copy()
            sig[z] = eps
            key = tuple(int(s) for s in sig)
            if key in found:
                continue
            ok = np.all(P * sig >= -tol, axis=1)
            R = both[ok]
            if len(R) >= q and np.linalg.matrix_rank(R, tol=1e-8) == q:
                found[key] = Chamber(key, R)
            else:
                found[key] = None
    return [c for c in found.values() if c is not None]


def _inner_direction(R) -> np.ndarray:
    """Unit vector with positive inner product with every ray of a pointed cone.

    The normalised ray sum works unless the cone is wider than a right
    angle in some direction; then a small LP maximises the smallest margin.
    """
    c = R.sum(axis=0)
    c /= np.linalg.norm(c)
    if np.min(R @ c) > 1e-3:
        return c
    k, q = R.shape
    # variables (c, t): maximise t subject to R c >= t, |c_j| <= 1
    res = linprog(
        np.r_[np.zeros(q), -1.0],
        A_ub=np.hstack([-R, np.ones((k, 1))]),
        b_ub=np.zeros(k),
        bounds=[(-1.0, 1.0)] * q + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0 or res.x[-1] <= 0:
        raise ValueError("cone is not pointed")
    c = res.x[:q]
    return c / np.linalg.norm(c)


def triangulate_cone(R, tol: float = 1e-12) -> list[np.ndarray]:
    """Split the pointed cone spanned by unit rays ``R`` into simplicial cones.

    Returns a list of ``q x q`` matrices whose columns are the rays of one
    simplicial cone. Uses a pulling triangulation of the cross-section
    polytope from its first vertex.
    """
    R = np.asarray(R, dtype=float)
    k, q = R.shape
    if k == q:
        return [R.T.copy()]
    c = _inner_direction(R)
    # orthonormal basis of the complement of c
    basis = np.linalg.svd(np.eye(q) - np.outer(c, c))[0][:, : q - 1]
    pts = (R / (R @ c)[:, None]) @ basis
    if q == 2:
        order = np.argsort(pts[:, 0])
        return [R[[order[0], order[-1]]].T.copy()]
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise ValueError("degenerate chamber cross-section") from exc
    out = []
    for facet in hull.simplices:
        if 0 in facet:
            continue
        M = R[[0, *facet]].T
        if abs(np.linalg.det(M)) > tol:
            out.append(M.copy())
    return out


def simplicial_cones(X, tol: float = ZERO_TOL) -> list[np.ndarray]:
    """Simplicial cones (columns = unit rays) tiling R^q for a rank-q design."""
    A, _, _ = unit_normals(X, tol)
    cones = []
    for ch in chambers(A, tol=tol):
        cones.extend(triangulate_cone(ch.rays))
    return cones


def region_count_generic(n: int, q: int) -> int:
    """Number of chambers of ``n`` generic central hyperplanes in R^q."""
    if q <= 0:
        return 1
    return 2 * sum(math.comb(n - 1, j) for j in range(q))


def sign_vector_count_generic(n: int, q: int) -> int:
    """Number of sign vectors taken by a generic design on a sphere.

    Counts faces of every dimension: zero sets of size ``k < q`` leave a
    generic arrangement of ``n - k`` hyperplanes in dimension ``q - k``.
    """
    return sum(math.comb(n, k) * region_count_generic(n - k, q - k) for k in range(q))


def row_sign_vectors(X, tol: float = ZERO_TOL, max_rays: int = 20) -> set[tuple]:
    """Every sign vector ``sign(X beta)`` for ``beta != 0``, enumerated exactly.

    Faces of the arrangement are generated by subsets of the extreme rays of
    some chamber, so the signs of sums over those subsets cover every face.
    """
    X = as_array(X)
    A, _, _ = unit_normals(X, tol)
    out = set()
    for ch in chambers(A, tol=tol):
        R = ch.rays
        if len(R) > max_rays:
            raise ValueError(f"chamber with {len(R)} rays exceeds face-enumeration cap")
        for size in range(1, len(R) + 1):
            for sub in itertools.combinations(range(len(R)), size):
                v = R[list(sub)].sum(axis=0)
                p = X @ v
                scale = np.linalg.norm(X, axis=1) * np.linalg.norm(v)
                s = np.where(np.abs(p) <= tol * np.maximum(scale, 1e-300), 0, np.sign(p))
                out.add(tuple(int(t) for t in s))
    return out

"""Sign-vector faces on spheres in parameter space and their boundary images.

For ``beta`` on the sphere of radius ``r`` the sign vector
``sign(X beta)`` labels a face of the row arrangement. The softened version
zeroes every coordinate with ``|x_i beta| <= Delta``, where ``Delta`` is the
log-odds threshold matching a distance ``delta`` from the cube boundary.
As ``r`` grows, the embedded faces approach faces ``G_s`` of the cube and
their mean-value images approach faces ``H_s`` of the expectation polytope.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear
from scipy.spatial.distance import cdist

from . import arrangement
from .fit import is_separated
from .geometry import embed_phi, eucl_to_mean, logodds_to_mean, softening_threshold
from .linalg import as_array, degeneracy_report

HALF_PI = 0.5 * math.pi

#: Largest n for which all 2^n responses are enumerated.
MAX_ENUM_N = 20


class SignVector(tuple):
    """A tuple over {-1, 0, +1}; ``n_s`` counts its zeros."""

    def __new__(cls, values):
        vals = tuple(int(v) for v in values)
        if any(v not in (-1, 0, 1) for v in vals):
            raise ValueError("sign vector entries must be -1, 0 or +1")
        return super().__new__(cls, vals)

    @property
    def n_s(self) -> int:
        return sum(1 for v in self if v == 0)


def sign_map(X, beta) -> np.ndarray:
    """Rows of ``sign(X beta)``; ``beta`` has shape ``(q,)`` or ``(m, q)``."""
    X = as_array(X)
    return np.sign(np.asarray(beta, dtype=float) @ X.T).astype(np.int8)


def sign_map_delta(X, beta, delta: float) -> np.ndarray:
    """Softened sign vectors: 0 where ``|x_i beta| <= Delta(delta)``."""
    X = as_array(X)
    Delta = float(softening_threshold(delta))
    lam = np.asarray(beta, dtype=float) @ X.T
    return np.where(np.abs(lam) <= Delta, 0, np.sign(lam)).astype(np.int8)


def _fibonacci_sphere(m: int) -> np.ndarray:
    i = np.arange(m) + 0.5
    z = 1.0 - 2.0 * i / m
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    rho = np.sqrt(1.0 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def sample_sphere(X, r: float, samples: int, delta: float | None = None, seed: int = 0) -> np.ndarray:
    """Points on the radius-``r`` sphere, denser near softened face boundaries.

    Deterministic for q <= 3: an angular grid (q = 2) or a Fibonacci lattice
    (q = 3), plus extra points just outside each band ``|x_i beta| <= Delta``.
    Larger q uses seeded Gaussian directions.
    """
    X = as_array(X)
    q = X.shape[1]
    if q == 1:
        return np.array([[r], [-r]])
    norms = np.linalg.norm(X, axis=1)
    Delta = float(softening_threshold(delta)) if delta is not None else 0.0
    rows = [i for i in range(len(X)) if norms[i] > 0]
    if q == 2:
        th = [np.linspace(0.0, 2 * math.pi, samples, endpoint=False)]
        offs = np.geomspace(1e-9, 1e-2, 24)
        for i in rows:
            base = math.atan2(X[i, 0], -X[i, 1])
            c = min(1.0, Delta / (r * norms[i]))
            w = math.asin(c)
            for centre in (base, base + math.pi):
                for side in (-1.0, 1.0):
                    th.append(centre + side * (w + offs))
        th = np.concatenate(th)
        return r * np.column_stack([np.cos(th), np.sin(th)])
    if q == 3:
        pts = [_fibonacci_sphere(samples)]
        k = max(64, int(math.sqrt(samples)) * 4)
        ang = np.linspace(0.0, 2 * math.pi, k, endpoint=False)
        for i in rows:
            a = X[i] / norms[i]
            basis = np.linalg.svd(a[None, :])[2][1:]
            c = min(1.0, Delta / (r * norms[i]))
            for off in (1e-9, 1e-6, 1e-3):
                h = min(1.0, c + off)
                ring = math.sqrt(max(0.0, 1.0 - h * h))
                for sgn in (1.0, -1.0):
                    circ = ring * (np.cos(ang)[:, None] * basis[0] + np.sin(ang)[:, None] * basis[1])
                    pts.append(circ + sgn * h * a)
        return r * np.concatenate(pts)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, q))
    return r * z / np.linalg.norm(z, axis=1, keepdims=True)


def enumerate_sign_vectors(X, r: float, delta: float | None, samples: int, seed: int = 0) -> Counter:
    """Observed sign vectors (with multiplicities) over sampled sphere points."""
    pts = sample_sphere(X, r, samples, delta, seed)
    S = sign_map(X, pts) if delta is None else sign_map_delta(X, pts, delta)
    return Counter(SignVector(s) for s in map(tuple, S))


def reparam_map_f(X, beta) -> np.ndarray:
    """Expectation parameter ``X^T h(phi(beta))``."""
    X = as_array(X)
    return eucl_to_mean(embed_phi(X, beta)) @ X


def reparam_map_f_direct(X, beta) -> np.ndarray:
    """Same map through mean values ``expit(X beta)``; used as a two-path check."""
    X = as_array(X)
    return logodds_to_mean(np.asarray(beta, dtype=float) @ X.T) @ X


@dataclass(frozen=True)
class CubeFace:
    """Face ``G_s`` of the closed cube: ``xi_i = s_i pi/2`` where ``s_i != 0``."""

    s: SignVector

    @property
    def dim(self) -> int:
        return self.s.n_s

    def distance(self, xi) -> np.ndarray:
        xi = np.atleast_2d(xi)
        s = np.asarray(self.s)
        fixed = s != 0
        d = xi[:, fixed] - HALF_PI * s[fixed]
        free = np.clip(xi[:, ~fixed], -HALF_PI, HALF_PI) - xi[:, ~fixed]
        return np.sqrt(np.sum(d * d, axis=1) + np.sum(free * free, axis=1))

    def grid(self, per_axis: int = 33) -> np.ndarray:
        s = np.asarray(self.s, dtype=float)
        free = np.flatnonzero(s == 0)
        base = HALF_PI * s
        if len(free) == 0:
            return base[None, :]
        ticks = np.linspace(-HALF_PI, HALF_PI, per_axis)
        mesh = np.array(list(itertools.product(ticks, repeat=len(free))))
        out = np.repeat(base[None, :], len(mesh), axis=0)
        out[:, free] = mesh
        return out


def cube_face_G(s) -> CubeFace:
    return CubeFace(SignVector(s))


@dataclass(frozen=True)
class ExpFace:
    """Face ``H_s = X^T h(G_s)``: the zonotope ``X^T e`` with ``e`` fixed where ``s != 0``."""

    X: np.ndarray
    s: SignVector

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.s) == 0)

    @property
    def dim(self) -> int:
        return int(np.linalg.matrix_rank(self.X[self.free])) if len(self.free) else 0

    @property
    def base(self) -> np.ndarray:
        e = (1.0 + np.asarray(self.s, dtype=float)) / 2.0
        e[self.free] = 0.0
        return e @ self.X

    def vertices(self) -> np.ndarray:
        k = len(self.free)
        if k == 0:
            return self.base[None, :]
        corners = np.array(list(itertools.product((0.0, 1.0), repeat=k)))
        return self.base + corners @ self.X[self.free]

    def grid(self, per_axis: int = 33) -> np.ndarray:
        k = len(self.free)
        if k == 0:
            return self.base[None, :]
        ticks = np.linspace(0.0, 1.0, per_axis)
        mesh = np.array(list(itertools.product(ticks, repeat=k)))
        return self.base + mesh @ self.X[self.free]

    def distance(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        k = len(self.free)
        diff = pts - self.base
        if k == 0:
            return np.linalg.norm(diff, axis=1)
        if k == 1:
            g = self.X[self.free[0]]
            t = np.clip(diff @ g / (g @ g), 0.0, 1.0)
            return np.linalg.norm(diff - t[:, None] * g, axis=1)
        A = self.X[self.free].T
        out = np.empty(len(pts))
        for j, b in enumerate(diff):
            res = lsq_linear(A, b, bounds=(0.0, 1.0), tol=1e-12)
            out[j] = np.linalg.norm(A @ res.x - b)
        return out


def exp_face_H(X, s, generic: bool = True) -> ExpFace:
    X = as_array(X)
    s = SignVector(s)
    if len(s) != X.shape[0]:
        raise ValueError("sign vector length must equal n")
    if generic and s.n_s > X.shape[1] - 1:
        raise ValueError(f"n_s = {s.n_s} exceeds q - 1 for a generic design")
    return ExpFace(X, s)


def hausdorff_distance(A, B, chunk: int = 2048) -> float:
    """Symmetric Hausdorff distance between finite point sets (rows)."""
    A, B = np.atleast_2d(np.asarray(A, float)), np.atleast_2d(np.asarray(B, float))
    if A.size == 0 or B.size == 0:
        raise ValueError("Hausdorff distance needs two nonempty point sets")
    if A.shape[1] != B.shape[1]:
        raise ValueError("point sets live in different dimensions")
    return max(_directed(A, B, chunk), _directed(B, A, chunk))


def affine_rank(points, tol: float = 1e-6) -> int:
    """Dimension of the affine hull of a point cloud, from singular values."""
    P = np.atleast_2d(points)
    if len(P) < 2:
        return 0
    s = np.linalg.svd(P - P.mean(axis=0), compute_uv=False)
    return int(np.sum(s > tol * max(s[0], 1e-300))) if s[0] > 0 else 0


@dataclass(frozen=True)
class FaceReport:
    s: SignVector
    n_s: int
    r: float
    d_H_phi_G: float
    d_H_f_H: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "s": list(self.s),
            "n_s": self.n_s,
            "r": self.r,
            "d_H_phi_G": self.d_H_phi_G,
            "d_H_f_H": self.d_H_f_H,
            "sample_count": self.sample_count,
        }


def face_distances(X, beta, s, per_axis: int = 33):
    """``d_H(phi(F), G_s)`` and ``d_H(f(F), H_s)`` for face samples ``beta``."""
    X = as_array(X)
    G = cube_face_G(s)
    H = exp_face_H(X, s, generic=False)
    xi = embed_phi(X, beta)
    eta = reparam_map_f(X, beta)
    # exact projection one way, face grid the other way
    d_phi = max(float(G.distance(xi).max()), _directed(G.grid(per_axis), xi))
    d_f = max(float(H.distance(eta).max()), _directed(H.grid(per_axis), eta))
    return d_phi, d_f


def _directed(P, Q, chunk: int = 2048) -> float:
    worst = 0.0
    for a in range(0, len(P), chunk):
        worst = max(worst, float(cdist(P[a:a + chunk], Q).min(axis=1).max()))
    return worst


def duality_check(X, r_list, delta: float, samples: int = 20000, seed: int = 0,
                  faces=None) -> list[FaceReport]:
    """Distances between sampled faces and their limiting cube and polytope faces.

    Faces are the softened sign vectors observed at any radius in ``r_list``
    (or the given ``faces``); a face with no samples at some radius is
    reported with ``sample_count = 0`` and NaN distances.
    """
    X = as_array(X)
    per_r = []
    for r in r_list:
        pts = sample_sphere(X, float(r), samples, delta, seed)
        per_r.append((float(r), pts, sign_map_delta(X, pts, delta)))
    if faces is None:
        faces = sorted({SignVector(t) for _, _, S in per_r for t in map(tuple, S)})
    out = []
    for s in faces:
        s = SignVector(s)
        key = np.array(s, dtype=np.int8)
        for r, pts, S in per_r:
            sel = np.all(S == key, axis=1)
            if not np.any(sel):
                out.append(FaceReport(s, s.n_s, r, math.nan, math.nan, 0))
                continue
            d_phi, d_f = face_distances(X, pts[sel], s)
            out.append(FaceReport(s, s.n_s, r, d_phi, d_f, int(sel.sum())))
    return out


def count_no_mle(X, max_n: int = MAX_ENUM_N) -> int:
    """Number of responses ``y in {0,1}^n`` for which no maximum likelihood estimate exists."""
    X = as_array(X)
    n = X.shape[0]
    if n > max_n:
        raise ValueError(f"n = {n} exceeds the enumeration limit {max_n}")
    return sum(1 for y in itertools.product((0, 1), repeat=n) if is_separated(X, np.array(y)))


def count_components(X, samples: int | None = None, r: float = 1.0, seed: int = 0) -> int:
    """Connected components of the complement of the row hyperplanes.

    By default counted exactly as the chambers of the arrangement; with
    ``samples`` it counts distinct full-sign vectors over sphere samples.
    """
    X = as_array(X)
    if np.any(np.all(X == 0.0, axis=1)):
        return 0
    if samples is None:
        A, _, _ = arrangement.unit_normals(X)
        return len(arrangement.chambers(A))
    S = sign_map(X, sample_sphere(X, r, samples, None, seed))
    return len({tuple(s) for s in S if np.all(s != 0)})


def sign_vector_count(X) -> int:
    """``|S|``: exact for generic designs, else by exact face enumeration."""
    X = as_array(X)
    n, q = X.shape
    if degeneracy_report(X).is_generic:
        return arrangement.sign_vector_count_generic(n, q)
    return len(arrangement.row_sign_vectors(X))


def full_sign_vectors(X) -> list[SignVector]:
    """Sign vectors of the chambers, in the coordinates of the rows of ``X``.

    Empty when ``X`` has a zero row, since then no sign vector is full.
    """
    X = as_array(X)
    if np.any(np.all(X == 0.0, axis=1)):
        return []
    A, row_map, row_sign = arrangement.unit_normals(X)
    out = set()
    for ch in arrangement.chambers(A):
        out.add(SignVector(np.asarray(ch.signs)[row_map] * row_sign))
    return sorted(out)

"""Row-minor linear algebra for design matrices.

Everything here works with subsets of ``q`` rows of an ``n x q`` matrix.
Subsets are 0-based index tuples enumerated in lexicographic order, which
keeps every report reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

#: Relative threshold below which a q x q row minor counts as singular.
TAU_SING = 1e-9

#: Default refusal threshold for enumerating C(n, q) subsets.
SUBSET_CAP = 10**6


class SubsetCapExceeded(ValueError):
    """Raised when a minor enumeration would visit too many subsets."""


def _check_cap(n: int, q: int, cap: int | None) -> int:
    count = math.comb(n, q)
    if cap is not None and count > cap:
        raise SubsetCapExceeded(
            f"C({n}, {q}) = {count} subsets exceeds the cap of {cap}"
        )
    return count


def subsets(n: int, q: int):
    """Lexicographic iterator over all q-element subsets of range(n)."""
    return itertools.combinations(range(n), q)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """An immutable ``n x q`` design matrix with lazily cached invariants.

    Rows are observations, columns are covariates. The degeneracy counts
    (``N0``, ``N1``) use the relative singularity threshold ``tau``.
    """

    entries: np.ndarray
    tau: float = TAU_SING
    cap: int | None = SUBSET_CAP

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("design matrix must be two-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("design matrix contains non-finite entries")
        if arr.shape[1] > arr.shape[0]:
            raise ValueError(
                f"design matrix has q={arr.shape[1]} columns but only n={arr.shape[0]} rows"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def q(self) -> int:
        return self.entries.shape[1]

    @cached_property
    def rank(self) -> int:
        return numerical_rank(self.entries, self.tau)

    @cached_property
    def n0(self) -> int:
        return int(np.sum(np.all(self.entries == 0.0, axis=1)))

    @cached_property
    def _degeneracy(self) -> "DegeneracyReport":
        return degeneracy_report(self.entries, tau=self.tau, cap=self.cap)

    @property
    def N0(self) -> int:
        return self._degeneracy.N0

    @property
    def N1(self) -> int:
        return self._degeneracy.N1

    @property
    def is_generic(self) -> bool:
        return self._degeneracy.is_generic

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"DesignMatrix(n={self.n}, q={self.q})"


def as_array(X) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.entries
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def as_design(X) -> DesignMatrix:
    return X if isinstance(X, DesignMatrix) else DesignMatrix(X)


def row_submatrix(X, I) -> np.ndarray:
    """Return the rows of ``X`` indexed by the subset ``I``, in order."""
    arr = as_array(X)
    idx = tuple(int(i) for i in I)
    if len(idx) != arr.shape[1]:
        raise ValueError(f"subset has {len(idx)} indices, expected q={arr.shape[1]}")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ValueError("subset indices must be strictly increasing")
    if idx and (idx[0] < 0 or idx[-1] >= arr.shape[0]):
        raise IndexError(f"subset {idx} out of range for n={arr.shape[0]}")
    return arr[list(idx), :]


def gram_det(V) -> float:
    """det(V^T V) as the squared diagonal of R in ``V = QR``.

    Forming ``V^T V`` would square the condition number, so a rank-deficient
    ``V`` could come out with a spurious positive determinant.
    """
    V = as_array(V)
    n, q = V.shape
    if q == 0:
        return 1.0
    if n < q:
        return 0.0
    r = np.linalg.qr(V, mode="r")
    return float(np.prod(np.diag(r) ** 2))


def minors(X, cap: int | None = SUBSET_CAP) -> np.ndarray:
    """Determinants of every q x q row submatrix, lexicographic order."""
    arr = as_array(X)
    n, q = arr.shape
    _check_cap(n, q, cap)
    if q == 0:
        return np.ones(1)
    idx = np.array(list(subsets(n, q)), dtype=np.intp).reshape(-1, q)
    out = np.empty(len(idx))
    chunk = 65536
    for start in range(0, len(idx), chunk):
        block = arr[idx[start:start + chunk]]
        out[start:start + chunk] = np.linalg.det(block)
    return out


@dataclass(frozen=True)
class MinorSumReport:
    lhs: float
    rhs: float
    max_rel_err: float
    # violations of the inequality chain, as non-negative magnitudes
    max_violation: float
    l1_violation: float
    scaled_l1_violation: float


def minor_sum_check(V, cap: int | None = SUBSET_CAP) -> MinorSumReport:
    """Compare det(V^T V) with the sum of squared q x q row minors.

    Also measures how far the chain
    ``max_I |det V_I| <= sqrt(det V^T V) <= sum_I |det V_I|`` and
    ``C(n,q)^(-1/2) sum_I |det V_I| <= sqrt(det V^T V)`` is violated,
    normalised by the Hadamard bound ``prod_j ||v_j||`` so that rounding in
    near-singular matrices is not mistaken for a violation. The relative
    error and the violations are computed on unit-norm columns, which
    changes every term by the same factor and avoids underflow.
    """
    V = as_array(V)
    n, q = V.shape
    count = _check_cap(n, q, cap)
    norms = np.linalg.norm(V, axis=0)
    U = V / np.where(norms > 0, norms, 1.0)
    d = minors(U, cap=cap)
    g = gram_det(U)
    sq = np.sort(d * d)
    s = math.fsum(sq)
    top = max(g, s)
    rel = 0.0 if top == 0.0 else abs(g - s) / top
    root = math.sqrt(g)
    a = np.abs(d)
    l1 = math.fsum(np.sort(a))
    had2 = float(np.prod(norms)) ** 2
    return MinorSumReport(
        lhs=gram_det(V),
        rhs=math.fsum(sq * had2) if had2 > 0 else 0.0,
        max_rel_err=rel,
        max_violation=max(0.0, float(a.max()) - root),
        l1_violation=max(0.0, root - l1),
        scaled_l1_violation=max(0.0, l1 / math.sqrt(count) - root),
    )


def singular_minor_mask(X, tau: float = TAU_SING, cap: int | None = SUBSET_CAP) -> np.ndarray:
    """Boolean mask over lexicographic subsets: True where the minor is singular."""
    arr = as_array(X)
    q = arr.shape[1]
    d = minors(arr, cap=cap)
    row_max = float(np.max(np.linalg.norm(arr, axis=1))) if arr.size else 0.0
    return np.abs(d) <= tau * row_max**q


def numerical_rank(X, tau: float = TAU_SING) -> int:
    arr = as_array(X)
    if arr.size == 0:
        return 0
    s = np.linalg.svd(arr, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tau * s[0]))


@dataclass(frozen=True)
class DegeneracyReport:
    N0: int
    N1: int
    is_generic: bool
    rank: int


def degeneracy_report(X, tau: float = TAU_SING, cap: int | None = SUBSET_CAP) -> DegeneracyReport:
    """Count singular (``N0``) and nonsingular (``N1``) q-row subsets."""
    arr = as_array(X)
    mask = singular_minor_mask(arr, tau=tau, cap=cap)
    N0 = int(mask.sum())
    N1 = int(mask.size - N0)
    return DegeneracyReport(N0=N0, N1=N1, is_generic=N0 == 0, rank=numerical_rank(arr, tau))


def column_space_equal(X, Xbar, tau: float = TAU_SING) -> bool:
    """True when ``X`` and ``Xbar`` span the same column space."""
    A, B = as_array(X), as_array(Xbar)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    ra, rb = numerical_rank(A, tau), numerical_rank(B, tau)
    return ra == rb == numerical_rank(np.hstack([A, B]), tau)

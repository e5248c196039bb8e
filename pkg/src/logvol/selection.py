"""Model scores: fit term plus a parametric-complexity penalty.

Three penalties are available:

``approx-volume``
    ``(q/2) log(pi/2) + 1/2 log C(n - n0, q)``, from the large-sample
    complexity formula with the volume replaced by ``pi^q sqrt(C(n - n0, q))``.
``exact-volume``
    ``-(q/2) log(2 pi) + log vol`` with the volume integrated numerically.
``bic``
    ``(q/2) log n``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import arrangement
from .fit import fit_mle, max_loglik, _newton
from .linalg import as_array, degeneracy_report
from .volume import IntegrationConfig, NotConvergedError, VolumeEstimate, integrate_volume, log_comb

CRITERIA = ("approx-volume", "exact-volume", "bic")


def complexity_approx(q: int, n: int, n0: int = 0) -> float:
    if n - n0 < q:
        raise ValueError(f"n - n0 = {n - n0} is smaller than q = {q}")
    return 0.5 * q * math.log(math.pi / 2) + 0.5 * log_comb(n - n0, q)


def complexity_bic(q: int, n: int) -> float:
    return 0.5 * q * math.log(n)


@dataclass(frozen=True)
class Complexity:
    value: float
    lower: float
    upper: float


def complexity_exact_volume(v: VolumeEstimate, q: int) -> Complexity:
    """``-(q/2) log(2 pi) + log vol`` with the volume's uncertainty propagated."""
    if not v.converged:
        raise NotConvergedError("volume estimate did not converge")
    if not v.value > 0:
        raise ValueError("volume must be positive")
    c = -0.5 * q * math.log(2 * math.pi)
    lo = max(v.value - v.uncertainty, 0.0)
    return Complexity(
        c + math.log(v.value),
        c + math.log(lo) if lo > 0 else -math.inf,
        c + math.log(v.value + v.uncertainty),
    )


def exact_parametric_complexity(X, max_n: int = 16) -> float:
    """``log sum_y sup_beta p(y | beta)`` by enumerating all ``2^n`` responses.

    For generic designs the separable responses are read off the chambers of
    the row arrangement (their supremum likelihood is 1); the rest are
    fitted by Newton's method. Other designs use LP-based suprema throughout.
    """
    X = as_array(X)
    n, q = X.shape
    if n > max_n:
        raise ValueError(f"n = {n} exceeds the enumeration limit {max_n}")
    generic = degeneracy_report(X).is_generic
    separable = set()
    if generic:
        A, row_map, row_sign = arrangement.unit_normals(X)
        for ch in arrangement.chambers(A):
            s = np.asarray(ch.signs)[row_map] * row_sign
            separable.add(tuple(int(v) for v in (s > 0)))
    logs = []
    for y in itertools.product((0, 1), repeat=n):
        if generic:
            if y in separable:
                logs.append(0.0)
                continue
            yv = np.array(y, dtype=float)
            _, ll, ok, _, _ = _newton(X, yv, np.zeros(q), 1e-10, 200)
            if not ok:
                ll = max_loglik(X, yv)
            logs.append(ll)
        else:
            logs.append(max_loglik(X, np.array(y)))
    return float(logsumexp(logs))


def count_zero_rows(X, tol: float = 0.0, intercept="auto") -> int:
    """Rows that are zero apart from intercept columns.

    ``intercept="auto"`` ignores every column that is identically one;
    pass a column index, a list of indices or ``None`` to override.
    """
    X = as_array(X)
    if intercept == "auto":
        skip = [j for j in range(X.shape[1]) if np.all(X[:, j] == 1.0)]
    elif intercept is None:
        skip = []
    elif isinstance(intercept, (int, np.integer)):
        skip = [int(intercept)]
    else:
        skip = [int(j) for j in intercept]
    keep = [j for j in range(X.shape[1]) if j not in skip]
    if not keep:
        # an intercept-only design has no row that is zero
        return 0
    return int(np.sum(np.all(np.abs(X[:, keep]) <= tol, axis=1)))


@dataclass(frozen=True)
class ModelScore:
    fit_term: float
    complexity_term: float
    total: float
    q: int
    n: int
    n0: int
    criterion: str
    separated: bool = False
    name: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def score(X, y, criterion: str = "approx-volume", zero_row_tol: float = 0.0, intercept="auto",
          volume_cfg: IntegrationConfig | None = None, name: str = "", fit=None) -> ModelScore:
    """Criterion value ``-max loglik + complexity``; infinite for separated data."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    X = as_array(X)
    n, q = X.shape
    # keep C(n - n0, q) defined when few rows survive the intercept exclusion
    n0 = min(count_zero_rows(X, zero_row_tol, intercept), n - q)
    fit = fit or fit_mle(X, y)
    if criterion == "approx-volume":
        comp = complexity_approx(q, n, n0)
    elif criterion == "bic":
        comp = complexity_bic(q, n)
    else:
        comp = complexity_exact_volume(integrate_volume(X, volume_cfg), q).value
    fit_term = math.inf if fit.separated else -fit.loglik
    return ModelScore(fit_term, comp, fit_term + comp, q, n, n0, criterion, fit.separated, name)


def select(candidates, y, criterion: str = "approx-volume", threads: int = 1, **kw) -> list[ModelScore]:
    """Rank candidate designs (``(name, X)`` pairs or a dict) by total score.

    Ties are broken by smaller q, then by input order. With ``threads > 1``
    candidates are scored concurrently; the result does not depend on it.
    """
    items = list(candidates.items()) if isinstance(candidates, dict) else list(candidates)
    if not items:
        raise ValueError("no candidates given")
    ns = {as_array(X).shape[0] for _, X in items}
    if len(ns) != 1:
        raise ValueError(f"candidates disagree on n: {sorted(ns)}")
    def one(item):
        name, X = item
        return score(X, y, criterion, name=str(name), **kw)

    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scores = list(pool.map(one, items))
    else:
        scores = [one(it) for it in items]
    if all(s.separated for s in scores):
        raise ValueError("every candidate model is separated; no maximum likelihood estimate exists")
    order = sorted(range(len(scores)), key=lambda k: (scores[k].total, scores[k].q, k))
    return [scores[k] for k in order]


def nested_candidates(n: int, seed: int, beta=(0.5, 1.0), extra: int = 1):
    """Simulated data from an intercept + one-covariate truth with nested candidates.

    Returns ``(candidates, y)`` with candidates ``q1`` (intercept),
    ``q2`` (truth) and ``q3`` ... (truth plus ``extra`` noise covariates).
    """
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, 1 + extra))
    X = np.column_stack([np.ones(n), Z])
    y = (rng.random(n) < expit(X[:, :2] @ np.asarray(beta, dtype=float))).astype(float)
    cands = [(f"q{k}", X[:, :k]) for k in range(1, 3 + extra)]
    return cands, y


def consistency_experiment(replicates: int = 100, n: int = 500, seed: int = 0,
                           criterion: str = "approx-volume") -> list[int]:
    """Selected q for each seeded replicate of :func:`nested_candidates`."""
    winners = []
    for r in range(replicates):
        cands, y = nested_candidates(n, seed + r)
        winners.append(select(cands, y, criterion)[0].q)
    return winners

"""Logistic regression fitting: Newton MLE, separation tests and the lasso path.

Separation is decided by linear programs before any Newton step, since
Newton iterates on separated data creep off to infinity while the gradient
still shrinks toward zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.special import expit

from . import _cd
from .geometry import fisher_info
from .linalg import as_array, numerical_rank

#: Margin below which the strict separation LP reports infeasibility.
SEPARATION_MARGIN = 1e-7
#: Norm at which Newton iterates are declared divergent.
DIVERGENCE_GUARD = 1e4
#: Clamp applied to probabilities when reporting deviances.
PROB_CLAMP = 1e-12


def _check_response(X, y):
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"response has length {y.shape[0]} but the design has n = {X.shape[0]}")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("response entries must be 0 or 1")
    return y


def loglik(X, beta, y) -> float:
    """``y^T lam - sum log(1 + exp(lam))`` with ``lam = X beta``."""
    X = as_array(X)
    y = _check_response(X, y)
    lam = X @ np.asarray(beta, dtype=float)
    return -math.fsum(np.logaddexp(0.0, lam) - y * lam)


def score(X, beta, y) -> np.ndarray:
    """Gradient ``X^T (y - e(X beta))`` of the log-likelihood."""
    X = as_array(X)
    y = _check_response(X, y)
    return X.T @ (y - expit(X @ np.asarray(beta, dtype=float)))


def separation_certificate(X, y, strict: bool = False):
    """A direction separating the zeros from the ones, or ``None``.

    ``strict=False`` looks for ``beta != 0`` with ``(2 y_i - 1) x_i beta >= 0``
    for all ``i`` (complete or quasi-complete separation), by maximising the
    summed margins over the unit box. ``strict=True`` asks for a common
    margin of at least :data:`SEPARATION_MARGIN`.
    """
    X = as_array(X)
    y = _check_response(X, y)
    n, q = X.shape
    A = (2.0 * y - 1.0)[:, None] * X
    scale = max(1.0, float(np.abs(A).sum(axis=1).max()))
    if strict:
        c = np.zeros(q + 1)
        c[-1] = -1.0
        A_ub = np.hstack([-A, np.ones((n, 1))])
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), bounds=[(-1, 1)] * q + [(None, 1)], method="highs")
        if res.status == 0 and res.x[-1] > SEPARATION_MARGIN * scale:
            return res.x[:q]
        return None
    res = linprog(-A.sum(axis=0), A_ub=-A, b_ub=np.zeros(n), bounds=[(-1, 1)] * q, method="highs")
    if res.status != 0:
        return None
    m = A @ res.x
    if m.sum() > SEPARATION_MARGIN * scale and m.min() >= -1e-9 * scale:
        return res.x
    return None


def is_separated(X, y) -> bool:
    """True when no maximum likelihood estimate exists."""
    return separation_certificate(X, y) is not None


@dataclass(frozen=True)
class FitResult:
    beta_hat: np.ndarray
    loglik: float
    converged: bool
    separated: bool
    iterations: int
    # "converged", "separated" or "ambiguous"
    status: str = "converged"
    grad_norm: float = math.nan
    certificate: np.ndarray | None = field(default=None, compare=False)


def _newton(X, y, beta, tol_grad, max_iter):
    ll = loglik(X, beta, y)
    for it in range(max_iter + 1):
        g = X.T @ (y - expit(X @ beta))
        gn = float(np.abs(g).max()) if g.size else 0.0
        if gn <= tol_grad:
            return beta, ll, True, it, gn
        if it == max_iter or np.linalg.norm(beta) > DIVERGENCE_GUARD:
            return beta, ll, False, it, gn
        H = fisher_info(X, beta)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        for _ in range(60):
            cand = beta + t * step
            lc = loglik(X, cand, y)
            if lc >= ll - 1e-13 * abs(ll):
                break
            t *= 0.5
        beta, ll = cand, lc
    return beta, ll, False, max_iter, gn


def fit_mle(X, y, tol_grad: float = 1e-8, max_iter: int = 100) -> FitResult:
    """Maximum likelihood fit by Newton's method with step halving.

    The Newton direction solves ``I(beta) step = score`` with the Fisher
    information from :func:`logvol.geometry.fisher_info`.

    For separated data ``beta_hat`` is the last Newton iterate and
    ``loglik`` is the supremum of the log-likelihood (see :func:`max_loglik`).
    """
    X = as_array(X)
    y = _check_response(X, y)
    q = X.shape[1]
    if numerical_rank(X) < q:
        raise ValueError("design matrix is rank deficient")
    cert = separation_certificate(X, y)
    beta, ll, ok, it, gn = _newton(X, y, np.zeros(q), tol_grad, max_iter)
    if cert is not None:
        return FitResult(beta, max_loglik(X, y), False, True, it, "separated", gn, cert)
    status = "converged" if ok else "ambiguous"
    return FitResult(beta, ll, ok, False, it, status, gn)


def max_loglik(X, y, tol_grad: float = 1e-8) -> float:
    """Supremum of the log-likelihood, finite even without an MLE.

    Observations that some recession direction fits perfectly contribute 0
    in the limit; the rest admit a maximiser on the subspace they see.
    """
    X = as_array(X)
    y = _check_response(X, y)
    n, q = X.shape
    A = (2.0 * y - 1.0)[:, None] * X
    scale = max(1.0, float(np.abs(A).sum(axis=1).max()))
    free = np.zeros(n, dtype=bool)
    while not free.all():
        rest = ~free
        res = linprog(-A[rest].sum(axis=0), A_ub=-A, b_ub=np.zeros(n), bounds=[(-1, 1)] * q, method="highs")
        if res.status != 0:
            break
        m = A @ res.x
        new = rest & (m > SEPARATION_MARGIN * scale)
        if not new.any():
            break
        free |= new
    rest = ~free
    if not rest.any():
        return 0.0
    Xr, yr = X[rest], y[rest]
    u, s, vt = np.linalg.svd(Xr, full_matrices=False)
    k = int(np.sum(s > 1e-10 * max(s[0], 1e-300))) if s.size and s[0] > 0 else 0
    if k == 0:
        return -Xr.shape[0] * math.log(2.0)
    Z = Xr @ vt[:k].T
    beta, ll, _, _, _ = _newton(Z, yr, np.zeros(k), tol_grad, 200)
    return ll


# ---------------------------------------------------------------- lasso path


@dataclass(frozen=True)
class LassoPath:
    lambdas: np.ndarray
    intercepts: np.ndarray
    betas: np.ndarray  # (n_lambdas, q)
    dev: np.ndarray  # deviance -2 loglik per lambda
    nonzero: np.ndarray
    converged: np.ndarray
    kkt: np.ndarray  # max KKT residual per lambda
    null_dev: float

    def __len__(self):
        return len(self.lambdas)

    def linear_predictor(self, X, k: int) -> np.ndarray:
        return self.intercepts[k] + _as_csc(X) @ self.betas[k]


def _as_csc(X):
    if sp.issparse(X):
        return sp.csc_matrix(X, dtype=float)
    return sp.csc_matrix(as_array(X))


def _deviance(y, eta):
    return 2.0 * math.fsum(np.logaddexp(0.0, eta) - y * eta)


def lambda_max(X, y, intercept: bool = True) -> float:
    Xc = _as_csc(X)
    y = np.asarray(y, dtype=float)
    r = y - (y.mean() if intercept else 0.5)
    return float(np.abs(Xc.T @ r).max()) / len(y)


def _kkt(g, beta, lam, gi):
    nz = beta != 0.0
    viol = np.where(nz, np.abs(g - lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return max(float(viol.max()) if viol.size else 0.0, abs(gi))


def fit_lasso_path(X, y, n_lambdas: int = 100, lambda_min_ratio: float = 1e-3, intercept: bool = True,
                   lambdas=None, tol_kkt: float = 1e-6, max_outer: int = 100, max_sweeps: int = 10_000,
                   weight_floor: float = 1e-5, dev_ratio_stop: float = 0.999) -> LassoPath:
    """L1-penalised logistic regression along a decreasing penalty grid.

    Minimises ``-loglik / n + lam * |beta|_1`` (intercept unpenalised) by
    IRLS with coordinate descent on each quadratic model, warm starts and
    sequential strong-rule screening. The grid is log-spaced from
    ``lambda_max`` down to ``lambda_min_ratio * lambda_max``; it is cut short
    once the explained deviance fraction passes ``dev_ratio_stop``.
    """
    Xc = _as_csc(X)
    n, q = Xc.shape
    y = _check_response(np.empty((n, 0)), y)
    indptr = Xc.indptr.astype(np.int64)
    indices = Xc.indices.astype(np.int64)
    data = Xc.data.astype(float)

    ybar = y.mean() if intercept else 0.5
    if intercept and ybar in (0.0, 1.0):
        raise ValueError("response is constant; the intercept-only model is separated")
    b0 = math.log(ybar / (1 - ybar)) if intercept else 0.0
    null_dev = _deviance(y, np.full(n, b0))
    lmax = lambda_max(Xc, y, intercept)
    if lambdas is None:
        if lmax == 0.0:
            lambdas = np.array([0.0])
        else:
            lambdas = lmax * np.geomspace(1.0, lambda_min_ratio, n_lambdas)
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambdas must be strictly decreasing")

    beta = np.zeros(q)
    eta = np.full(n, b0)
    g = _cd.csc_tmatvec(indptr, indices, data, y - expit(eta)) / n
    lam_prev = lmax
    out = {k: [] for k in ("lam", "b0", "beta", "dev", "nz", "ok", "kkt")}
    for lam in lambdas:
        strong = (np.abs(g) >= 2 * lam - lam_prev) | (beta != 0.0)
        if lam >= lmax:
            # every penalised coefficient is zero by the KKT conditions
            strong[:] = False
        ok = False
        for _ in range(max_outer):
            p = expit(eta)
            w = np.maximum(p * (1 - p), weight_floor)
            res = (y - p) / w
            xwx = _cd.col_weighted_sq(indptr, indices, data, w, n)
            b_old = beta.copy()
            b0_old = b0
            while True:
                active = np.flatnonzero(strong).astype(np.int64)
                b0, _ = _cd.cd_sweeps(indptr, indices, data, w, res, beta, b0, active, xwx,
                                      lam, n, intercept, 1e-12, max_sweeps)
                eta = b0 + Xc @ beta
                # check the quadratic model's optimality outside the strong set
                gq = _cd.csc_tmatvec(indptr, indices, data, w * res) / n
                miss = (~strong) & (np.abs(gq) > lam)
                if not miss.any():
                    break
                strong |= miss
            g = _cd.csc_tmatvec(indptr, indices, data, y - expit(eta)) / n
            gi = float(np.sum(y - expit(eta))) / n if intercept else 0.0
            kkt = _kkt(g, beta, lam, gi)
            step = max(float(np.max(np.abs(beta - b_old))) if q else 0.0, abs(b0 - b0_old))
            if kkt <= tol_kkt:
                ok = True
                break
            if step == 0.0:
                break
        dev = _deviance(y, eta)
        out["lam"].append(lam)
        out["b0"].append(b0)
        out["beta"].append(beta.copy())
        out["dev"].append(dev)
        out["nz"].append(int(np.count_nonzero(beta)))
        out["ok"].append(ok)
        out["kkt"].append(kkt)
        lam_prev = lam
        if null_dev > 0 and 1 - dev / null_dev > dev_ratio_stop:
            break
    return LassoPath(
        lambdas=np.array(out["lam"]),
        intercepts=np.array(out["b0"]),
        betas=np.array(out["beta"]).reshape(-1, q),
        dev=np.array(out["dev"]),
        nonzero=np.array(out["nz"]),
        converged=np.array(out["ok"]),
        kkt=np.array(out["kkt"]),
        null_dev=null_dev,
    )


def heldout_deviance(y, eta) -> float:
    """Mean binomial deviance with probabilities clamped away from 0 and 1."""
    p = np.clip(expit(eta), PROB_CLAMP, 1 - PROB_CLAMP)
    y = np.asarray(y, dtype=float)
    return -2.0 * float(np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))


@dataclass(frozen=True)
class CVResult:
    index: int
    mean_dev: np.ndarray
    fold_dev: np.ndarray  # (folds, n_lambdas)


def cv_folds(n: int, folds: int, seed: int = 0) -> list[np.ndarray]:
    if folds < 2:
        raise ValueError("need at least two folds")
    if folds > n:
        raise ValueError("more folds than observations")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, folds)]


def cross_validate_path(X, y, path: LassoPath, folds: int = 10, seed: int = 0, intercept: bool = True,
                        **fit_kw) -> CVResult:
    """Pick the penalty minimising mean held-out deviance over random folds.

    Every fold is refitted on the full path's penalty grid; if a fold's
    path stops early its last fit is carried forward. Ties go to the larger
    penalty.
    """
    Xc = _as_csc(X)
    y = np.asarray(y, dtype=float)
    n = len(y)
    L = len(path.lambdas)
    fold_dev = np.empty((folds, L))
    for k, test in enumerate(cv_folds(n, folds, seed)):
        train = np.setdiff1d(np.arange(n), test)
        yt = y[train]
        if intercept and yt.min() == yt.max():
            # single-class training fold: the fit is the clamped constant
            eta = np.full(len(test), 1e3 if yt[0] == 1 else -1e3)
            fold_dev[k] = heldout_deviance(y[test], eta)
            continue
        sub = fit_lasso_path(Xc[train], yt, lambdas=path.lambdas, intercept=intercept, **fit_kw)
        for j in range(L):
            jj = min(j, len(sub) - 1)
            fold_dev[k, j] = heldout_deviance(y[test], sub.linear_predictor(Xc[test], jj))
    mean = fold_dev.mean(axis=0)
    return CVResult(int(np.argmin(mean)), mean, fold_dev)

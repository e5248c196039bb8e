"""Binary image denoising with a dictionary of thickened line segments.

A black-and-white image is a union of dictionary atoms; each pixel is then
flipped independently with probability ``noise_rate``. A lasso path of
logistic regressions on the dictionary (plus an unpenalised intercept)
is fitted to the noisy pixels, and one penalty is picked by the approximate
volume criterion and another by cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .fit import LassoPath, cross_validate_path, fit_lasso_path
from .selection import complexity_approx


@dataclass(frozen=True)
class DenoiseSpec:
    width: int = 48
    height: int = 32
    noise_rate: float = 0.1
    seg_length: float = 9.0
    thickness: float = 2.0
    orientations: int = 12
    stride: int = 2
    coverage: float = 0.25  # target fraction of black pixels in the signal
    seed: int = 0
    n_lambdas: int = 100
    lambda_min_ratio: float = 1e-3
    folds: int = 10

    def __post_init__(self):
        if not 0 <= self.noise_rate < 0.5:
            raise ValueError("noise_rate must lie in [0, 0.5)")
        if self.width < 1 or self.height < 1 or self.stride < 1:
            raise ValueError("image size and stride must be positive")


def segment_dictionary(spec: DenoiseSpec) -> sp.csc_matrix:
    """0/1 indicator columns of thick segments centred on a lattice.

    Column order: lattice row, lattice column, orientation. A pixel belongs
    to a segment when its centre lies within ``thickness / 2`` of it.
    Duplicate and empty columns are dropped.
    """
    H, W = spec.height, spec.width
    yy, xx = np.mgrid[0:H, 0:W]
    px, py = xx.ravel() + 0.5, yy.ravel() + 0.5
    half, rad = spec.seg_length / 2.0, spec.thickness / 2.0
    cols, seen = [], set()
    for cy in np.arange(spec.stride / 2.0, H, spec.stride):
        for cx in np.arange(spec.stride / 2.0, W, spec.stride):
            dx, dy = px - cx, py - cy
            for k in range(spec.orientations):
                th = math.pi * k / spec.orientations
                ux, uy = math.cos(th), math.sin(th)
                t = np.clip(dx * ux + dy * uy, -half, half)
                d2 = (dx - t * ux) ** 2 + (dy - t * uy) ** 2
                idx = np.flatnonzero(d2 <= rad * rad)
                key = idx.tobytes()
                if idx.size and key not in seen:
                    seen.add(key)
                    cols.append(idx)
    indptr = np.concatenate([[0], np.cumsum([len(c) for c in cols])])
    indices = np.concatenate(cols)
    return sp.csc_matrix((np.ones(len(indices)), indices, indptr), shape=(H * W, len(cols)))


def make_signal(D: sp.csc_matrix, spec: DenoiseSpec, rng) -> tuple[np.ndarray, np.ndarray]:
    """Union of random atoms covering about ``spec.coverage`` of the pixels."""
    n, q = D.shape
    img = np.zeros(n, dtype=bool)
    atoms = []
    for j in rng.permutation(q):
        if img.mean() >= spec.coverage:
            break
        img[D.indices[D.indptr[j]:D.indptr[j + 1]]] = True
        atoms.append(int(j))
    return img.astype(float), np.array(atoms)


def add_noise(signal, rate: float, rng) -> np.ndarray:
    flip = rng.random(signal.shape) < rate
    return np.where(flip, 1.0 - signal, signal)


def active_zero_rows(D: sp.csc_matrix, beta) -> int:
    """Rows with no nonzero entry among the active columns."""
    active = np.flatnonzero(beta)
    if active.size == 0:
        return D.shape[0]
    hit = np.zeros(D.shape[0], dtype=bool)
    sub = D[:, active]
    hit[sub.indices] = True
    return int(D.shape[0] - hit.sum())


def volume_criterion_path(D: sp.csc_matrix, path: LassoPath) -> np.ndarray:
    """Approximate volume criterion at each penalty of a fitted path.

    The fit term is the path's own negative log-likelihood. q counts the
    active covariates plus the intercept, and n0 the rows that are zero
    apart from the intercept.
    """
    n = D.shape[0]
    out = np.empty(len(path))
    for k in range(len(path)):
        q = int(np.count_nonzero(path.betas[k])) + 1
        n0 = min(active_zero_rows(D, path.betas[k]), n - q)
        out[k] = 0.5 * path.dev[k] + complexity_approx(q, n, n0)
    return out


@dataclass(frozen=True)
class DenoiseResult:
    spec: dict
    n: int
    q: int
    signal_atoms: int
    flipped: int
    path_length: int
    volume_index: int
    cv_index: int
    volume_lambda: float
    cv_lambda: float
    volume_nonzero: int
    cv_nonzero: int
    volume_mae: float
    cv_mae: float
    volume_rmse: float
    cv_rmse: float

    def to_dict(self) -> dict:
        return asdict(self)


def run_denoise(spec: DenoiseSpec = DenoiseSpec(), return_images: bool = False):
    """Simulate, fit and select; returns a :class:`DenoiseResult` (and images)."""
    rng = np.random.default_rng(spec.seed)
    D = segment_dictionary(spec)
    signal, atoms = make_signal(D, spec, rng)
    y = add_noise(signal, spec.noise_rate, rng)
    path = fit_lasso_path(D, y, spec.n_lambdas, spec.lambda_min_ratio, intercept=True)
    crit = volume_criterion_path(D, path)
    kv = int(np.argmin(crit))
    cv = cross_validate_path(D, y, path, spec.folds, seed=spec.seed)
    kc = cv.index
    pv = expit(path.linear_predictor(D, kv))
    pc = expit(path.linear_predictor(D, kc))
    res = DenoiseResult(
        spec=asdict(spec),
        n=D.shape[0],
        q=D.shape[1],
        signal_atoms=len(atoms),
        flipped=int(np.sum(y != signal)),
        path_length=len(path),
        volume_index=kv,
        cv_index=kc,
        volume_lambda=float(path.lambdas[kv]),
        cv_lambda=float(path.lambdas[kc]),
        volume_nonzero=int(path.nonzero[kv]),
        cv_nonzero=int(path.nonzero[kc]),
        volume_mae=float(np.mean(np.abs(pv - signal))),
        cv_mae=float(np.mean(np.abs(pc - signal))),
        volume_rmse=float(math.sqrt(np.mean((pv - signal) ** 2))),
        cv_rmse=float(math.sqrt(np.mean((pc - signal) ** 2))),
    )
    if return_images:
        shape = (spec.height, spec.width)
        images = {
            "signal": signal.reshape(shape),
            "noisy": y.reshape(shape),
            "volume": pv.reshape(shape),
            "cv": pc.reshape(shape),
        }
        return res, images
    return res

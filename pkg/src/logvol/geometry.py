"""Coordinates on the saturated Bernoulli model and the logistic submodel.

Three coordinate systems describe the saturated model for ``n`` binary
observations: log-odds ``lam`` in R^n, means ``e`` in (0, 1)^n and the
Euclidean coordinates ``xi`` in the open cube (-pi/2, pi/2)^n, where the
Fisher metric is the identity. A design matrix ``X`` embeds the natural
parameter ``beta`` into the cube via ``phi(beta) = xi(X beta)``.

The log-odds to cube map is evaluated as the Gudermannian
``gd(u/2) = 2 * arctan(tanh(u / 4))`` rather than ``arcsin(tanh(u / 2))``;
both are the same function but the former keeps full relative accuracy
near the cube faces and never overflows.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, logit

from .linalg import as_array


def logodds_to_mean(lam):
    return expit(np.asarray(lam, dtype=float))


def mean_to_logodds(e):
    e = np.asarray(e, dtype=float)
    if np.any((e <= 0) | (e >= 1)):
        raise ValueError("mean parameters must lie strictly inside (0, 1)")
    return logit(e)


def logodds_to_eucl(lam):
    lam = np.asarray(lam, dtype=float)
    return 2.0 * np.arctan(np.tanh(lam / 4.0))


def mean_to_eucl(e):
    return np.arcsin(2.0 * np.asarray(e, dtype=float) - 1.0)


def eucl_to_mean(xi):
    """``h(xi) = (1 + sin xi) / 2``; also defined on the closed cube."""
    return 0.5 * (1.0 + np.sin(np.asarray(xi, dtype=float)))


def half_sech(u):
    """``1 / (2 cosh(u / 2))`` without overflow for large ``|u|``."""
    a = np.abs(np.asarray(u, dtype=float))
    t = np.exp(-0.5 * a)
    return t / (1.0 + t * t)


def log_half_sech(u):
    a = np.abs(np.asarray(u, dtype=float))
    return -0.5 * a - np.log1p(np.exp(-a))


def _linear_predictor(X, beta):
    X = as_array(X)
    beta = np.asarray(beta, dtype=float)
    if beta.shape[-1] != X.shape[1]:
        raise ValueError(f"beta has length {beta.shape[-1]}, design has q={X.shape[1]}")
    return X, beta @ X.T


def embed_phi(X, beta):
    """Image of ``beta`` (shape ``(q,)`` or ``(m, q)``) in the Euclidean cube."""
    _, lam = _linear_predictor(X, beta)
    return logodds_to_eucl(lam)


def phi_jacobian(X, beta):
    """Jacobian ``M(beta) X`` of the embedding, with ``M_ii = 1/(2 cosh(x_i beta / 2))``."""
    X, lam = _linear_predictor(X, beta)
    return half_sech(lam)[..., :, None] * X


def fisher_info(X, beta):
    """Fisher information ``X^T D X`` of the natural parameter at ``beta``.

    Computed as ``J^T J`` from :func:`phi_jacobian`, so the fitting code and
    the volume code share one arithmetic path.
    """
    J = phi_jacobian(X, beta)
    return np.swapaxes(J, -1, -2) @ J


def volume_density(X, beta):
    """``sqrt(det(X^T D_{X beta} X))``; vectorised over leading axes of ``beta``."""
    G = fisher_info(X, beta)
    q = G.shape[-1]
    if q == 1:
        det = G[..., 0, 0]
    elif q == 2:
        det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
    else:
        det = np.linalg.det(G)
    return np.sqrt(np.maximum(det, 0.0))


def softening_threshold(delta):
    """Log-odds threshold ``Delta = 2 artanh(cos delta)`` for a softening ``delta``.

    ``|phi_i(beta)| < pi/2 - delta`` holds exactly when ``|x_i beta| < Delta``.
    Evaluated as ``-2 log tan(delta / 2)``, which stays accurate as
    ``delta -> 0``.
    """
    delta = np.asarray(delta, dtype=float)
    if np.any((delta <= 0) | (delta >= np.pi / 2)):
        raise ValueError("delta must lie in (0, pi/2)")
    return -2.0 * np.log(np.tan(delta / 2.0))


def threshold_to_softening(Delta):
    """Inverse of :func:`softening_threshold`."""
    return 2.0 * np.arctan(np.exp(-0.5 * np.asarray(Delta, dtype=float)))

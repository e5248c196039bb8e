"""Data behind the embedding pictures for ``X = [x1; 1]``.

Nothing is plotted here; the curves and volumes are returned as arrays and
tables so that any plotting tool can draw them.
"""

from __future__ import annotations

import numpy as np

from .geometry import embed_phi
from .volume import IntegrationConfig, VolumeEstimate, integrate_volume

FIGURE1_X1 = (1.0, 0.5, 0.2, 0.07, 0.01, 0.0)


def beta_grid(x1: float, points: int = 401, saturation: float = 80.0) -> np.ndarray:
    """Symmetric grid in beta, log-spaced so that both coordinates saturate.

    The largest ``|beta|`` makes ``|x1 beta|`` (or ``|beta|`` when ``x1`` is
    zero or at least one) reach ``saturation``, where the embedding sits
    within ``exp(-saturation / 2)`` of the cube corner.
    """
    if points < 3:
        raise ValueError("points must be at least 3")
    scale = min(abs(x1), 1.0) or 1.0
    top = np.log1p(saturation / scale)
    s = np.linspace(-top, top, points)
    return np.sign(s) * np.expm1(np.abs(s))


def figure1_design(x1: float) -> np.ndarray:
    return np.array([[float(x1)], [1.0]])


def figure1_curve(x1: float, points: int = 401) -> np.ndarray:
    """Rows ``(beta, xi1, xi2)`` of the embedded curve ``phi(beta)``."""
    b = beta_grid(x1, points)
    xi = embed_phi(figure1_design(x1), b[:, None])
    return np.column_stack([b, xi])


def figure1(x1_list=FIGURE1_X1, points: int = 401, cfg: IntegrationConfig | None = None):
    """Curves and volumes for each ``x1``.

    Returns
    -------
    rows : list of tuple
        ``(x1, beta, xi1, xi2)`` for every curve point.
    volumes : list of (float, VolumeEstimate)
    """
    rows, volumes = [], []
    for x1 in x1_list:
        for b, xi1, xi2 in figure1_curve(x1, points):
            rows.append((float(x1), float(b), float(xi1), float(xi2)))
        v: VolumeEstimate = integrate_volume(figure1_design(x1), cfg)
        volumes.append((float(x1), v))
    return rows, volumes

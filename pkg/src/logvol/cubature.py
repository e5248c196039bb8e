"""Globally adaptive cubature over collections of hyperrectangles.

Cells are integrated with an embedded pair of rules (Gauss-Kronrod 7/15 in
one dimension, Genz-Malik 7/5 in two or more). Each refinement pass bisects
the cells carrying the largest error estimates; Genz-Malik cells are split
along the axis with the largest fourth difference. Totals are accumulated
with ``math.fsum`` so results do not depend on cell order.

Integrands receive a batch of points ``(m, d)`` together with an integer
``tag`` per point, letting one pool integrate several coordinate patches
(cones, shells) at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])


@dataclass(frozen=True)
class Rule:
    """Embedded cubature rule on [-1, 1]^d; weights sum to one."""

    nodes: np.ndarray
    w_high: np.ndarray
    w_low: np.ndarray
    # indices used for the fourth-difference split heuristic (Genz-Malik only)
    center: int = 0
    inner: np.ndarray | None = None
    outer: np.ndarray | None = None
    ratio: float = 0.0

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]


def gauss_kronrod_rule() -> Rule:
    x = np.concatenate([-_XGK[:-1], _XGK[::-1]])
    wk = np.concatenate([_WGK[:-1], _WGK[::-1]]) / 2.0
    wg_full = np.zeros(8)
    wg_full[1::2] = _WG
    wg = np.concatenate([wg_full[:-1], wg_full[::-1]]) / 2.0
    return Rule(nodes=x[:, None], w_high=wk, w_low=wg)


def genz_malik_rule(d: int) -> Rule:
    """Degree-7 rule with embedded degree-5 estimate (Genz and Malik, 1980)."""
    if d < 2:
        raise ValueError("Genz-Malik rules need d >= 2")
    l2 = math.sqrt(9.0 / 70.0)
    l4 = math.sqrt(9.0 / 10.0)
    l5 = math.sqrt(9.0 / 19.0)
    w1 = (12824.0 - 9120.0 * d + 400.0 * d * d) / 19683.0
    w2 = 980.0 / 6561.0
    w3 = (1820.0 - 400.0 * d) / 19683.0
    w4 = 200.0 / 19683.0
    w5 = 6859.0 / 19683.0 / 2.0**d
    e1 = (729.0 - 950.0 * d + 50.0 * d * d) / 729.0
    e2 = 245.0 / 486.0
    e3 = (265.0 - 100.0 * d) / 1458.0
    e4 = 25.0 / 729.0

    pts, wh, wl = [np.zeros(d)], [w1], [e1]
    inner, outer = np.zeros((d, 2), dtype=int), np.zeros((d, 2), dtype=int)
    for lam, ww, ee, slot in ((l2, w2, e2, inner), (l4, w3, e3, outer)):
        for i in range(d):
            for k, sgn in enumerate((1.0, -1.0)):
                p = np.zeros(d)
                p[i] = sgn * lam
                slot[i, k] = len(pts)
                pts.append(p)
                wh.append(ww)
                wl.append(ee)
    for i in range(d):
        for j in range(i + 1, d):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    p = np.zeros(d)
                    p[i], p[j] = si * l4, sj * l4
                    pts.append(p)
                    wh.append(w4)
                    wl.append(e4)
    for signs in np.ndindex(*(2,) * d):
        pts.append(l5 * (1.0 - 2.0 * np.array(signs, dtype=float)))
        wh.append(w5)
        wl.append(0.0)
    return Rule(
        nodes=np.array(pts),
        w_high=np.array(wh),
        w_low=np.array(wl),
        inner=inner,
        outer=outer,
        ratio=(l2 / l4) ** 2,
    )


def default_rule(d: int) -> Rule:
    return gauss_kronrod_rule() if d == 1 else genz_malik_rule(d)


@dataclass
class CubatureResult:
    estimate: float
    error: float
    evaluations: int
    converged: bool
    cells: int


class AdaptiveCubature:
    """A pool of cells refined until the summed error estimate meets a tolerance.

    Parameters
    ----------
    f : callable
        ``f(points, tags) -> values`` with ``points`` of shape ``(m, d)``.
    d : int
        Dimension of the cells.
    batch_max : int
        Upper bound on cells bisected in a single pass.
    """

    def __init__(self, f, d: int, rule: Rule | None = None, batch_max: int = 4096):
        self.f = f
        self.d = d
        self.rule = rule or default_rule(d)
        self.batch_max = batch_max
        self.evaluations = 0
        self.center = np.empty((0, d))
        self.half = np.empty((0, d))
        self.est = np.empty(0)
        self.err = np.empty(0)
        self.split = np.empty(0, dtype=np.intp)
        self.tag = np.empty(0, dtype=np.intp)
        self.group = np.empty(0, dtype=np.intp)

    def _evaluate(self, center, half, tag):
        rule = self.rule
        k, m = center.shape[0], rule.nodes.shape[0]
        pts = center[:, None, :] + half[:, None, :] * rule.nodes[None, :, :]
        vals = np.asarray(
            self.f(pts.reshape(k * m, self.d), np.repeat(tag, m)), dtype=float
        ).reshape(k, m)
        self.evaluations += k * m
        vol = np.prod(2.0 * half, axis=1)
        high = vol * (vals @ rule.w_high)
        low = vol * (vals @ rule.w_low)
        err = np.abs(high - low)
        if rule.inner is not None:
            f0 = vals[:, rule.center][:, None]
            fi = vals[:, rule.inner[:, 0]] + vals[:, rule.inner[:, 1]] - 2.0 * f0
            fo = vals[:, rule.outer[:, 0]] + vals[:, rule.outer[:, 1]] - 2.0 * f0
            diff = np.abs(fi - rule.ratio * fo)
            # near-ties go to the widest axis, then the lowest index
            score = diff + 1e-12 * np.max(diff, axis=1, keepdims=True) * (half / half.max(axis=1, keepdims=True))
            split = np.argmax(score, axis=1)
        else:
            split = np.zeros(k, dtype=np.intp)
        bad = ~np.isfinite(high)
        if np.any(bad):
            raise FloatingPointError("integrand returned non-finite values")
        return high, err, split

    def add(self, lower, upper, tags=None, groups=None):
        """Add cells ``[lower, upper]`` (arrays of shape ``(k, d)``) to the pool."""
        lower = np.atleast_2d(np.asarray(lower, dtype=float))
        upper = np.atleast_2d(np.asarray(upper, dtype=float))
        k = lower.shape[0]
        tags = np.zeros(k, dtype=np.intp) if tags is None else np.asarray(tags, dtype=np.intp)
        groups = np.zeros(k, dtype=np.intp) if groups is None else np.asarray(groups, dtype=np.intp)
        keep = np.all(upper > lower, axis=1)
        lower, upper, tags, groups = lower[keep], upper[keep], tags[keep], groups[keep]
        if len(lower) == 0:
            return
        center = 0.5 * (lower + upper)
        half = 0.5 * (upper - lower)
        est, err, split = self._evaluate(center, half, tags)
        self._append(center, half, est, err, split, tags, groups)

    def _append(self, center, half, est, err, split, tag, group):
        self.center = np.concatenate([self.center, center])
        self.half = np.concatenate([self.half, half])
        self.est = np.concatenate([self.est, est])
        self.err = np.concatenate([self.err, err])
        self.split = np.concatenate([self.split, split])
        self.tag = np.concatenate([self.tag, tag])
        self.group = np.concatenate([self.group, group])

    @property
    def estimate(self) -> float:
        return math.fsum(self.est)

    @property
    def error(self) -> float:
        return math.fsum(self.err)

    def group_estimate(self, group: int) -> float:
        return math.fsum(self.est[self.group == group])

    def refine(self, abs_tol: float = 0.0, rel_tol: float = 0.0, max_evals: int = 10**7) -> bool:
        """Bisect cells until ``error <= max(abs_tol, rel_tol * |estimate|)``."""
        while True:
            total_err = self.error
            tol = max(abs_tol, rel_tol * abs(self.estimate))
            if total_err <= tol:
                return True
            if self.evaluations >= max_evals:
                return False
            order = np.argsort(-self.err, kind="stable")
            cum = np.cumsum(self.err[order])
            k = int(np.searchsorted(cum, total_err - 0.5 * tol)) + 1
            k = max(1, min(k, self.batch_max, len(order)))
            chosen = np.sort(order[:k])
            self._bisect(chosen)

    def _bisect(self, idx):
        c, h, s = self.center[idx], self.half[idx].copy(), self.split[idx]
        rows = np.arange(len(idx))
        h[rows, s] *= 0.5
        c_lo, c_hi = c.copy(), c.copy()
        c_lo[rows, s] -= h[rows, s]
        c_hi[rows, s] += h[rows, s]
        center = np.concatenate([c_lo, c_hi])
        half = np.concatenate([h, h])
        tag = np.concatenate([self.tag[idx]] * 2)
        group = np.concatenate([self.group[idx]] * 2)
        est, err, split = self._evaluate(center, half, tag)
        keep = np.ones(len(self.est), dtype=bool)
        keep[idx] = False
        for name in ("center", "half", "est", "err", "split", "tag", "group"):
            setattr(self, name, getattr(self, name)[keep])
        self._append(center, half, est, err, split, tag, group)

    def result(self, converged: bool) -> CubatureResult:
        return CubatureResult(self.estimate, self.error, self.evaluations, converged, len(self.est))


def integrate_box(f, lower, upper, abs_tol=0.0, rel_tol=1e-8, max_evals=10**7, splits=1) -> CubatureResult:
    """Adaptive integral of ``f(points)`` over one box, optionally pre-split."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    d = lower.size
    grid = [np.linspace(lo, hi, splits + 1) for lo, hi in zip(lower, upper)]
    lo_cells, hi_cells = [], []
    for corner in np.ndindex(*(splits,) * d):
        lo_cells.append([grid[k][corner[k]] for k in range(d)])
        hi_cells.append([grid[k][corner[k] + 1] for k in range(d)])
    pool = AdaptiveCubature(lambda p, t: f(p), d)
    pool.add(np.array(lo_cells), np.array(hi_cells))
    ok = pool.refine(abs_tol=abs_tol, rel_tol=rel_tol, max_evals=max_evals)
    return pool.result(ok)

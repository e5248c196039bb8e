"""Fisher information volume of a logistic regression model.

The volume is the integral over R^q of ``sqrt(det(X^T D X))`` with
``D = diag(1/4 sech^2(x_i beta / 2))``. The deterministic engine (q <= 4)
works as follows.

1. Zero rows are dropped (they contribute nothing to the metric) and the
   design is optionally replaced by the orthonormal factor of its QR
   decomposition, which leaves the volume unchanged.
2. R^q is tiled by simplicial cones taken from the chambers of the row
   hyperplane arrangement. Inside a cone with unit rays ``v_j`` every
   ``x_i beta`` keeps one sign, so with ``beta = sum_j tau_j s_j v_j`` and
   ``s_j = 2 / min_i |x_i v_j|`` the integrand is bounded by
   ``C exp(-sum_j tau_j)`` for ``tau >= 0``.
3. The boxes ``[0, T]^q`` in tau are grown by a constant factor. Each
   growth step adds a shell of ``q`` boxes per cone to one adaptive
   cubature pool.
4. Growth stops once the newest shell adds a negligible fraction and the
   tail bound is below half the tolerance. For generic designs the tail
   bound is the sign-vector bound at the softening matched to the
   inscribed radius; otherwise it is the exponential envelope from step 2.

Designs with 5 <= q <= 8 fall back to seeded importance sampling.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from . import arrangement
from .cubature import AdaptiveCubature, integrate_box
from .geometry import half_sech, softening_threshold, threshold_to_softening
from .linalg import (
    SUBSET_CAP,
    SubsetCapExceeded,
    as_array,
    degeneracy_report,
    minors,
    numerical_rank,
    subsets,
)

ADAPTIVE = "adaptive-cubature"
MONTE_CARLO = "monte-carlo"

#: Largest q handled by the deterministic engine.
MAX_CUBATURE_Q = 4
#: Largest q handled at all.
MAX_Q = 8
#: Above this many row subsets the density uses a Gram determinant instead of minors.
MINOR_TERMS_MAX = 2000


class NotConvergedError(ArithmeticError):
    """A numerical result that missed its tolerance was needed."""


@dataclass(frozen=True)
class IntegrationConfig:
    rel_tol: float = 1e-6
    shell_growth: float = 1.5
    shell_stop_frac: float = 1e-8
    max_evals: int = 20_000_000
    mc_samples: int = 400_000
    seed: int = 0
    # softening used by the tail bound; None matches it to the current radius
    delta: float | None = None
    precondition: bool = True
    subset_cap: int = SUBSET_CAP

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.shell_growth > 1:
            raise ValueError("shell_growth must exceed 1")
        if self.delta is not None and not 0 < self.delta < math.pi / 2:
            raise ValueError("delta must lie in (0, pi/2)")


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    err_integration: float
    tail_bound: float
    radius: float
    method: str
    evaluations: int
    converged: bool
    # not serialised: which tail argument was used, and free-form remarks
    tail_kind: str = field(default="sign-vector", compare=False)
    note: str = field(default="", compare=False)

    @property
    def uncertainty(self) -> float:
        return self.err_integration + self.tail_bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("tail_kind")
        d.pop("note")
        return d


def _config(cfg, overrides) -> IntegrationConfig:
    cfg = cfg or IntegrationConfig()
    return replace(cfg, **overrides) if overrides else cfg


def log_comb(n: int, k: int) -> float:
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


class DensityEvaluator:
    """Evaluates ``sqrt(det(X^T D X))`` at many points.

    With few row subsets the determinant is expanded as a sum of squared
    minors times products of ``1/(2 cosh)`` factors, which has no
    cancellation and keeps full relative accuracy deep in the tails.
    """

    def __init__(self, X, cap: int = SUBSET_CAP):
        X = as_array(X)
        self.X = X
        n, q = X.shape
        self.use_minors = math.comb(n, q) <= MINOR_TERMS_MAX
        if self.use_minors:
            d = minors(X, cap=cap)
            keep = d != 0.0
            self.idx = np.array(list(subsets(n, q)), dtype=np.intp).reshape(-1, q)[keep]
            self.d2 = d[keep] ** 2

    def __call__(self, beta):
        beta = np.atleast_2d(beta)
        hs = half_sech(beta @ self.X.T)
        if not self.use_minors:
            G = np.einsum("mi,ij,ik->mjk", hs * hs, self.X, self.X)
            return np.sqrt(np.maximum(np.linalg.det(G), 0.0))
        out = np.empty(len(beta))
        step = max(1, 4_000_000 // max(1, self.idx.size))
        for a in range(0, len(beta), step):
            P = np.prod(hs[a:a + step][:, self.idx], axis=2)
            out[a:a + step] = np.sqrt((P * P) @ self.d2)
        return out


def stabilization_constant(X, cap: int = SUBSET_CAP) -> float:
    """``max_I max_{v in {-1,1}^q} ||X_I^{-1} v||`` over nonsingular row subsets.

    Outside the ball of radius ``Delta`` times this constant no point has
    ``q`` rows with ``|x_i beta| <= Delta``.
    """
    X = as_array(X)
    n, q = X.shape
    d = minors(X, cap=cap)
    idx = np.array(list(subsets(n, q)), dtype=np.intp).reshape(-1, q)
    row_max = float(np.max(np.linalg.norm(X, axis=1)))
    good = np.abs(d) > 1e-9 * row_max**q
    if not np.any(good):
        raise ValueError("design has no nonsingular row subset")
    inv = np.linalg.inv(X[idx[good]])
    corners = 1.0 - 2.0 * np.array(list(np.ndindex(*(2,) * q)), dtype=float)
    norms = np.linalg.norm(np.einsum("cij,vj->cvi", inv, corners), axis=2)
    return float(norms.max())


def stabilization_radius(X, delta: float, cap: int = SUBSET_CAP) -> float:
    return float(softening_threshold(delta)) * stabilization_constant(X, cap)


def sign_vector_bound(n: int, q: int, delta: float, S_count: int) -> float:
    return S_count * delta * math.pi ** (q - 1) * math.comb(n, q)


def tail_bound(X, R: float, delta: float, S_count: int | None = None, cap: int = SUBSET_CAP) -> float:
    """Bound on the volume outside the ball of radius ``R``.

    Valid for generic ``X`` once ``R`` reaches the stabilization radius for
    ``delta``; ``S_count`` defaults to the exact number of sign vectors of a
    generic design.
    """
    X = as_array(X)
    n, q = X.shape
    if not degeneracy_report(X, cap=cap).is_generic:
        raise ValueError("tail bound requires a generic design")
    if not 0 < delta < math.pi / 2:
        raise ValueError("delta must lie in (0, pi/2)")
    need = stabilization_radius(X, delta, cap)
    if R < need:
        raise ValueError(f"radius {R:.6g} is below the stabilization radius {need:.6g}")
    if S_count is None:
        S_count = arrangement.sign_vector_count_generic(n, q)
    return sign_vector_bound(n, q, delta, S_count)


def _shell_boxes(q: int, T_prev: float, T: float):
    """Boxes covering ``[0, T]^q`` minus ``[0, T_prev]^q`` (disjoint)."""
    if T_prev == 0.0:
        return np.zeros((1, q)), np.full((1, q), T)
    lo, hi = np.zeros((q, q)), np.empty((q, q))
    for j in range(q):
        hi[j, :j] = T_prev
        hi[j, j:] = T
        lo[j, j] = T_prev
    return lo, hi


def _prepare(X, cfg):
    X = as_array(X)
    Y = X[np.any(X != 0.0, axis=1)]
    scale = np.eye(X.shape[1])
    if cfg.precondition:
        Qf, Rf = np.linalg.qr(Y)
        Y, scale = Qf, Rf
    return Y, scale


def _cone_maps(Y):
    """Per simplicial cone: ``beta = W tau`` and the smallest decay length per axis."""
    cones = arrangement.simplicial_cones(Y)
    maps, scales = [], []
    rn = np.linalg.norm(Y, axis=1)[:, None]
    for V in cones:
        P = np.abs(Y @ V)
        Pz = np.where(P > arrangement.ZERO_TOL * rn, P, np.inf)
        b = Pz.min(axis=0)
        maps.append(V * (2.0 / b))
        # fastest decay along tau_j has rate max_i |y_i v_j| * 2 / b_j
        scales.append(b / (2.0 * P.max(axis=0)))
    return maps, scales


def _log_axis(u, a):
    """``tau = a (exp(u) - 1)`` and its derivative, spreading decay scales evenly in u."""
    e = np.exp(u)
    return a * (e - 1.0), a * e


def integrate_volume(X, cfg: IntegrationConfig | None = None, **overrides) -> VolumeEstimate:
    """Volume of the logistic regression model with design ``X``.

    Parameters
    ----------
    X : array_like or DesignMatrix
        ``n x q`` design.
    cfg : IntegrationConfig, optional
        Tolerances and budgets; keyword overrides are applied on top.

    Returns
    -------
    VolumeEstimate
        ``converged`` is set when ``err_integration + tail_bound`` is at most
        ``rel_tol * value``.
    """
    cfg = _config(cfg, overrides)
    X = as_array(X)
    n, q = X.shape
    if q > MAX_Q:
        raise ValueError(f"q = {q} exceeds the supported maximum of {MAX_Q}")
    if numerical_rank(X) < q:
        return VolumeEstimate(0.0, 0.0, 0.0, math.inf, ADAPTIVE, 0, True, "none", "rank < q")
    if q > MAX_CUBATURE_Q:
        return _monte_carlo_volume(X, cfg)

    Y, scale = _prepare(X, cfg)
    maps, scales = _cone_maps(Y)
    jac = np.array([abs(np.linalg.det(W)) for W in maps])
    dens = DensityEvaluator(Y, cap=cfg.subset_cap)

    def f(u, tags):
        out = np.empty(len(u))
        for c in np.unique(tags):
            sel = tags == c
            tau, dtau = _log_axis(u[sel], scales[c])
            out[sel] = jac[c] * np.prod(dtau, axis=1) * dens(tau @ maps[c].T)
        return out

    # inscribed radius of the tau-box union, in the caller's coordinates
    inv_rows = max(float(np.linalg.norm(np.linalg.inv(W), axis=1).max()) for W in maps)
    to_caller = 1.0 / np.linalg.norm(scale, 2)

    generic_tail = None
    try:
        if degeneracy_report(X, cap=cfg.subset_cap).is_generic:
            c_X = stabilization_constant(X, cfg.subset_cap)
            generic_tail = (c_X, arrangement.sign_vector_count_generic(n, q))
    except SubsetCapExceeded:
        generic_tail = None
    envelope = math.sqrt(float(np.linalg.det(Y.T @ Y))) * math.fsum(jac)

    pool = AdaptiveCubature(f, q)
    T_prev, T, k = 0.0, 1.0, 0
    ok = False
    while True:
        lo, hi = _shell_boxes(q, T_prev, T)
        m = len(lo)
        # boxes in tau map to boxes in u axis by axis
        a = np.repeat(np.array(scales), m, axis=0)
        pool.add(
            np.log1p(np.tile(lo, (len(maps), 1)) / a),
            np.log1p(np.tile(hi, (len(maps), 1)) / a),
            tags=np.repeat(np.arange(len(maps)), m),
            groups=np.full(m * len(maps), k),
        )
        ok = pool.refine(rel_tol=0.5 * cfg.rel_tol, max_evals=cfg.max_evals)
        total = pool.estimate
        radius = T / inv_rows * to_caller
        if generic_tail is not None:
            c_X, S = generic_tail
            if cfg.delta is None:
                delta = float(threshold_to_softening(radius / c_X))
                tail = sign_vector_bound(n, q, delta, S)
            else:
                delta = cfg.delta
                valid = radius >= float(softening_threshold(delta)) * c_X
                tail = sign_vector_bound(n, q, delta, S) if valid else math.inf
            kind = "sign-vector"
        else:
            tail = envelope * -math.expm1(q * math.log1p(-math.exp(-T)))
            kind = "envelope"
        shell_small = abs(pool.group_estimate(k)) < cfg.shell_stop_frac * abs(total)
        if shell_small and tail <= 0.5 * cfg.rel_tol * abs(total):
            break
        if not ok or pool.evaluations >= cfg.max_evals:
            break
        T_prev, T, k = T, T * cfg.shell_growth, k + 1

    err = pool.error
    converged = bool(ok and err + tail <= cfg.rel_tol * abs(total))
    return VolumeEstimate(total, err, tail, radius, ADAPTIVE, pool.evaluations, converged, kind)


def _monte_carlo_volume(X, cfg: IntegrationConfig) -> VolumeEstimate:
    """Importance-sampled volume for 5 <= q <= 8.

    Works in QR coordinates where the design has orthonormal columns. The
    proposal is an equal mixture of an isotropic Gaussian and an isotropic
    multivariate Cauchy with common scale ``2 sqrt(n / q)``; the Cauchy part
    keeps the weight ``f / p`` bounded since the integrand decays
    exponentially. The reported error is three standard errors.
    """
    Y, _ = _prepare(X, replace(cfg, precondition=True))
    n, q = Y.shape
    rng = np.random.default_rng(cfg.seed)
    N = int(cfg.mc_samples)
    s = 2.0 * math.sqrt(n / q)
    z = rng.standard_normal((N, q))
    use_cauchy = rng.random(N) < 0.5
    chi = np.sqrt(rng.chisquare(1.0, N))
    beta = s * np.where(use_cauchy[:, None], z / chi[:, None], z)
    r2 = np.sum((beta / s) ** 2, axis=1)
    log_gauss = -0.5 * r2 - 0.5 * q * math.log(2 * math.pi)
    log_cauchy = (
        gammaln((1 + q) / 2) - gammaln(0.5) - 0.5 * q * math.log(math.pi) - 0.5 * (1 + q) * np.log1p(r2)
    )
    log_p = np.logaddexp(log_gauss, log_cauchy) + math.log(0.5) - q * math.log(s)
    dens = DensityEvaluator(Y, cap=cfg.subset_cap)
    w = dens(beta) / np.exp(log_p)
    value = math.fsum(w) / N
    se = float(np.std(w, ddof=1)) / math.sqrt(N)
    err = 3.0 * se
    return VolumeEstimate(
        value, err, 0.0, math.inf, MONTE_CARLO, N, bool(err <= cfg.rel_tol * value), "none",
        "importance sampling over all of R^q",
    )


@dataclass(frozen=True)
class Ball:
    radius: float


@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple


def restricted_volume(X, region, cfg: IntegrationConfig | None = None, **overrides) -> float:
    """Volume contributed by the parameters in ``region`` (a :class:`Ball` or :class:`Box`).

    Balls centred at the origin use hyperspherical coordinates (polar for
    q = 2, with angular breakpoints at the row hyperplanes); boxes use
    Cartesian cubature.
    """
    cfg = _config(cfg, overrides)
    X = as_array(X)
    q = X.shape[1]
    if numerical_rank(X) < q:
        raise ValueError("restricted volume needs a rank-q design")
    Y = X[np.any(X != 0.0, axis=1)]
    dens = DensityEvaluator(Y, cap=cfg.subset_cap)
    tol = dict(rel_tol=cfg.rel_tol, max_evals=cfg.max_evals)
    if isinstance(region, Box):
        lo, hi = np.asarray(region.lower, float), np.asarray(region.upper, float)
        if lo.shape != (q,) or hi.shape != (q,):
            raise ValueError("box bounds must have length q")
        if np.any(hi <= lo):
            return 0.0
        return integrate_box(dens, lo, hi, splits=2, **tol).estimate
    if not isinstance(region, Ball):
        raise TypeError("region must be a Ball or a Box")
    R = float(region.radius)
    if R <= 0:
        return 0.0
    if q == 1:
        return integrate_box(dens, [-R], [R], splits=2, **tol).estimate
    if q == 2:
        ang = np.arctan2(Y[:, 0], -Y[:, 1]) % np.pi
        brk = np.unique(np.concatenate([[0.0, 2 * np.pi], ang, ang + np.pi]))
        lo = np.column_stack([np.zeros(len(brk) - 1), brk[:-1]])
        hi = np.column_stack([np.full(len(brk) - 1, R), brk[1:]])

        def g(p, t):
            r, th = p[:, 0], p[:, 1]
            return r * dens(np.column_stack([r * np.cos(th), r * np.sin(th)]))

        pool = AdaptiveCubature(g, 2)
        pool.add(lo, hi)
        pool.refine(**tol)
        return pool.estimate

    def h(p, t):
        r, th = p[:, 0], p[:, 1:]
        beta = np.empty((len(p), q))
        sprod = np.ones(len(p))
        jac = r ** (q - 1)
        for k in range(q - 1):
            beta[:, k] = r * sprod * np.cos(th[:, k])
            if k < q - 2:
                jac = jac * np.sin(th[:, k]) ** (q - 2 - k)
            sprod = sprod * np.sin(th[:, k])
        beta[:, q - 1] = r * sprod
        return jac * dens(beta)

    lo = np.zeros((2, q))
    hi = np.concatenate([[R], np.full(q - 2, np.pi), [np.pi]])[None].repeat(2, axis=0)
    lo[1, -1], hi[1, -1] = np.pi, 2 * np.pi
    pool = AdaptiveCubature(h, q)
    pool.add(lo, hi)
    pool.refine(**tol)
    return pool.estimate


def approx_volume(n: int, q: int, n0: int = 0) -> float:
    """``pi^q sqrt(C(n - n0, q))``."""
    if n - n0 < q:
        raise ValueError(f"n - n0 = {n - n0} is smaller than q = {q}")
    return math.exp(q * math.log(math.pi) + 0.5 * log_comb(n - n0, q))


@dataclass(frozen=True)
class BoundsReport:
    value: float
    lower: float  # pi^q
    upper: float  # C(n, q) pi^q
    n1_lower: float
    n1_upper: float
    generic_lower: float | None
    margins: dict
    ok: bool


def bounds_check(X, v: VolumeEstimate, tol: float = 1e-4) -> BoundsReport:
    """Compare a volume estimate with the general and N1-refined bounds."""
    X = as_array(X)
    n, q = X.shape
    rep = degeneracy_report(X)
    pq = math.pi**q
    C = math.comb(n, q)
    lower, upper = pq, C * pq
    n1_lo, n1_hi = rep.N1 * pq / math.sqrt(C), rep.N1 * pq
    glo = pq * math.sqrt(C) if rep.is_generic else None
    x = v.value
    margins = {
        "lower": x - lower,
        "upper": upper - x,
        "n1_lower": x - n1_lo,
        "n1_upper": n1_hi - x,
    }
    if glo is not None:
        margins["generic_lower"] = x - glo
    ok = all(m >= -tol for m in margins.values())
    return BoundsReport(x, lower, upper, n1_lo, n1_hi, glo, margins, ok)


@dataclass(frozen=True)
class JumpReport:
    base: float
    jump_min: float
    jump_max: float
    values: tuple


def volume_jump(X, eps: float, trials: int = 5, cfg: IntegrationConfig | None = None, seed: int = 0,
                max_resample: int = 100) -> JumpReport:
    """Volume change under random generic perturbations of a non-generic design.

    Each perturbation ``E`` has Frobenius norm drawn uniformly from
    ``[eps / 2, eps)``.
    """
    X = as_array(X)
    rep = degeneracy_report(X)
    if rep.is_generic:
        raise ValueError("volume_jump expects a non-generic design")
    if rep.rank < X.shape[1]:
        raise ValueError("volume_jump expects a full-rank design")
    cfg = cfg or IntegrationConfig()
    rng = np.random.default_rng(seed)
    base = integrate_volume(X, cfg).value
    vals = []
    for _ in range(trials):
        for _ in range(max_resample):
            E = rng.standard_normal(X.shape)
            E *= eps * rng.uniform(0.5, 1.0) / np.linalg.norm(E)
            Z = X + E
            if degeneracy_report(Z).is_generic:
                break
        else:
            raise RuntimeError("could not draw a generic perturbation")
        vals.append(integrate_volume(Z, cfg).value)
    jumps = [v - base for v in vals]
    return JumpReport(base, min(jumps), max(jumps), tuple(vals))

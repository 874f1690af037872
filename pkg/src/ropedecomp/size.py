"""Geometric size functionals: Euclidean-invariant, scale-covariant, positive."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import cdist

from . import _kernels as K
from .curve import PolygonalCurve, arclength_barycenter, length

P_MAX = 64.0
HULL_FLAT_TOL = 1e-12
MEB_TOL = 1e-12
_BLOCK = 1024


class Kind(enum.Enum):
    DIAM = "diam"
    RMIN = "rmin"
    RADIAL_P = "rp"
    PAIRWISE_P = "dp"
    CONV_HULL_ETA = "conv"
    GYRATION = "gyr"
    ARTIFICIAL_STAR = "star"


class CenterSolverError(RuntimeError):
    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


@dataclass(frozen=True)
class QuadratureConfig:
    points_per_edge: int = 8
    center_solver_tol: float = 1e-10
    center_solver_max_iter: int = 200

    def __post_init__(self):
        if self.points_per_edge < 2:
            raise ValueError("points_per_edge must be at least 2")
        if not self.center_solver_tol > 0 or self.center_solver_max_iter < 1:
            raise ValueError("center solver tolerance and iteration cap must be positive")


def _fmt(x: float) -> str:
    # shortest text that parses back to the same double
    if x == math.inf:
        return "inf"
    short = f"{x:g}"
    return short if float(short) == x else repr(x)


def _parse_p(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "oo"):
        return math.inf
    return float(t)


@dataclass(frozen=True)
class SizeFunctionalSpec:
    """Which size functional ``D`` to use, with its parameter if any.

    String form (used on the command line): ``diam``, ``rmin``, ``rp:<p>``,
    ``dp:<p>``, ``conv:<eta>``, ``gyr``, ``star``; ``<p>`` may be ``inf``.
    """

    kind: Kind
    p: float | None = None
    eta: float | None = None

    def __post_init__(self):
        if self.kind in (Kind.RADIAL_P, Kind.PAIRWISE_P):
            if self.p is None or not (1.0 <= self.p <= P_MAX or self.p == math.inf):
                raise ValueError(f"p must lie in [1, {P_MAX:g}] or be inf, got {self.p}")
        elif self.p is not None:
            raise ValueError(f"{self.kind.value} takes no p parameter")
        if self.kind is Kind.CONV_HULL_ETA:
            if self.eta is None or not (self.eta > 0 and math.isfinite(self.eta)):
                raise ValueError(f"eta must be positive, got {self.eta}")
        elif self.eta is not None:
            raise ValueError(f"{self.kind.value} takes no eta parameter")

    @classmethod
    def parse(cls, text: str) -> SizeFunctionalSpec:
        head, _, arg = text.strip().partition(":")
        try:
            kind = Kind(head.lower())
        except ValueError:
            raise ValueError(f"unknown size functional {text!r}") from None
        if kind in (Kind.RADIAL_P, Kind.PAIRWISE_P):
            if not arg:
                raise ValueError(f"{head} needs a p value, e.g. {head}:2")
            return cls(kind, p=_parse_p(arg))
        if kind is Kind.CONV_HULL_ETA:
            if not arg:
                raise ValueError("conv needs an eta value, e.g. conv:0.01")
            return cls(kind, eta=float(arg))
        if arg:
            raise ValueError(f"{head} takes no argument")
        return cls(kind)

    def __str__(self) -> str:
        if self.p is not None:
            return f"{self.kind.value}:{_fmt(self.p)}"
        if self.eta is not None:
            return f"{self.kind.value}:{_fmt(self.eta)}"
        return self.kind.value

    @property
    def needs_thickness(self) -> bool:
        return self.kind is Kind.ARTIFICIAL_STAR


ALL_KINDS_EXAMPLE = tuple(SizeFunctionalSpec.parse(s) for s in
                          ("diam", "rmin", "rp:3", "dp:1", "conv:0.01", "gyr", "star"))


def diameter(curve: PolygonalCurve) -> float:
    """Largest vertex-to-vertex distance, which is the diameter of the whole polygon."""
    return float(K.vertex_diameter(curve.vertices))


@lru_cache(maxsize=16)
def _scramble(n: int) -> np.ndarray:
    # fixed order for the incremental ball; polygon order is the worst case
    return np.random.Generator(np.random.Philox(0x5EB)).permutation(n)


def min_enclosing_radius(curve: PolygonalCurve):
    """Radius and centre of the smallest closed ball containing the curve."""
    v = curve.vertices
    c, r = K.min_ball(np.ascontiguousarray(v[_scramble(len(v))]), MEB_TOL)
    return float(r), np.asarray(c)


@lru_cache(maxsize=16)
def _gauss_legendre01(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def quadrature_nodes(curve: PolygonalCurve, m: int):
    """Gauss-Legendre nodes on every edge with arclength weights.

    Returns ``(points, weights)`` of shapes ``(n * m, 3)`` and ``(n * m,)``;
    rows ``e * m .. e * m + m - 1`` belong to edge ``e``.
    """
    u, w = _gauss_legendre01(m)
    a, b = curve.edges()
    pts = a[:, None, :] + u[None, :, None] * (b - a)[:, None, :]
    wts = curve.edge_lengths[:, None] * w[None, :]
    return pts.reshape(-1, 3), wts.reshape(-1)


def _second_moment(curve: PolygonalCurve, center: np.ndarray) -> float:
    # exact per-edge integral of |x - c|^2 along a straight segment
    a, b = curve.edges()
    d = b - a
    a = a - center
    l = curve.edge_lengths
    per_edge = l * ((a * a).sum(1) + (a * d).sum(1) + (d * d).sum(1) / 3.0)
    return float(per_edge.sum())


def gyration_radius(curve: PolygonalCurve) -> float:
    """Root mean square distance to the arclength barycenter (exact)."""
    c = arclength_barycenter(curve)
    return math.sqrt(_second_moment(curve, c) / length(curve))


def radial_size_p(curve: PolygonalCurve, p: float, cfg: QuadratureConfig | None = None):
    """L^p-radial size ``min_a (mean |x - a|^p)^(1/p)`` and its optimal centre.

    ``p = inf`` gives the minimal enclosing radius and ``p = 2`` the radius of
    gyration (closed form). Other ``p`` use per-edge Gauss-Legendre quadrature
    and a Powell search for the centre on a normalized copy of the curve,
    finished with guarded Newton steps.
    """
    cfg = cfg or QuadratureConfig()
    if p == math.inf:
        return min_enclosing_radius(curve)
    if not 1.0 <= p <= P_MAX:
        raise ValueError(f"p must lie in [1, {P_MAX:g}] or be inf, got {p}")
    if p == 2.0:
        return gyration_radius(curve), arclength_barycenter(curve)

    x, w = quadrature_nodes(curve, cfg.points_per_edge)
    origin = arclength_barycenter(curve)
    scale = diameter(curve)
    y = (x - origin) / scale
    w = w / w.sum()

    def mean_power(a):
        d = np.sqrt(((y - a) ** 2).sum(1))
        return float(w @ d ** p)

    res = minimize(mean_power, np.zeros(3), method="Powell",
                   options={"xtol": cfg.center_solver_tol, "ftol": 1e-15,
                            "maxiter": cfg.center_solver_max_iter})
    if not res.success:
        raise CenterSolverError(f"center solver for R_{p:g} did not converge: {res.message}",
                                int(res.nit))
    a = _newton_polish(y, w, p, res.x, mean_power, cfg)
    return scale * mean_power(a) ** (1.0 / p), origin + scale * a


def _newton_polish(y, w, p, a, f, cfg):
    # Powell's xtol is not a bound on the centre error; a few guarded Newton
    # steps on the smooth convex objective pin the centre down to cfg tol
    fa = f(a)
    for _ in range(cfg.center_solver_max_iter):
        diff = a - y
        r = np.sqrt((diff * diff).sum(1))
        if r.min() <= 0.0:
            break
        wr = w * r ** (p - 2.0)
        u = diff / r[:, None]
        grad = p * (wr @ diff)
        hess = p * (wr.sum() * np.eye(3) + (p - 2.0) * (u.T * wr) @ u)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        b = a - step
        fb = f(b)
        # near the optimum f is flat to rounding; allow that much increase
        if fb > fa * (1.0 + 1e-14):
            break
        a, fa = b, fb
        if np.linalg.norm(step) <= cfg.center_solver_tol:
            break
    return a


def pairwise_spread_p(curve: PolygonalCurve, p: float,
                      cfg: QuadratureConfig | None = None) -> float:
    """Pairwise L^p-spread ``(Len^-2 * double integral of |x - y|^p)^(1/p)``.

    Same-edge blocks use the exact value ``2 L^(p+2) / ((p+1)(p+2))``; all
    other edge pairs use product Gauss-Legendre quadrature.
    """
    cfg = cfg or QuadratureConfig()
    if p == math.inf:
        return diameter(curve)
    if not 0.0 < p <= P_MAX:
        raise ValueError(f"p must lie in (0, {P_MAX:g}] or be inf, got {p}")
    m = cfg.points_per_edge
    x, w = quadrature_nodes(curve, m)
    scale = diameter(curve)
    x = x / scale
    w = w / scale
    n = curve.n
    edge = np.repeat(np.arange(n), m)
    total = 0.0
    for start in range(0, len(x), _BLOCK):
        sl = slice(start, start + _BLOCK)
        d = cdist(x[sl], x) ** p
        d[edge[sl][:, None] == edge[None, :]] = 0.0
        total += float(np.sum((w[sl][:, None] * d) @ w))
    l = curve.edge_lengths / scale
    total += float(np.sum(l ** (p + 2.0))) * 2.0 / ((p + 1.0) * (p + 2.0))
    return scale * (total / float(l.sum()) ** 2) ** (1.0 / p)


def hull_volume(curve: PolygonalCurve) -> float:
    """Volume of the convex hull; 0 for (numerically) planar or collinear curves."""
    v = curve.vertices
    diam = diameter(curve)
    try:
        vol = ConvexHull(v - v.mean(0)).volume
    except QhullError:
        return 0.0
    return 0.0 if vol <= HULL_FLAT_TOL * diam ** 3 else float(vol)


def convex_hull_size(curve: PolygonalCurve, eta: float) -> float:
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    return (hull_volume(curve) + eta * diameter(curve) ** 3) ** (1.0 / 3.0)


def evaluate(spec: SizeFunctionalSpec, curve: PolygonalCurve,
             cfg: QuadratureConfig | None = None, thickness: float | None = None) -> float:
    """Value of the size functional ``spec`` on ``curve``.

    ``thickness`` may be passed for the artificial functional to avoid
    recomputing it.
    """
    cfg = cfg or QuadratureConfig()
    k = spec.kind
    if k is Kind.DIAM:
        return diameter(curve)
    if k is Kind.RMIN:
        return min_enclosing_radius(curve)[0]
    if k is Kind.RADIAL_P:
        return radial_size_p(curve, spec.p, cfg)[0]
    if k is Kind.PAIRWISE_P:
        return pairwise_spread_p(curve, spec.p, cfg)
    if k is Kind.CONV_HULL_ETA:
        return convex_hull_size(curve, spec.eta)
    if k is Kind.GYRATION:
        return gyration_radius(curve)
    from .invariants import artificial_size
    return artificial_size(curve, thickness=thickness)

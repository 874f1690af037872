"""Inscribed polygons of model curves and compression-radius convergence studies."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .curve import PolygonalCurve, is_embedded
from .invariants import report
from .size import QuadratureConfig, SizeFunctionalSpec


class TooCoarseError(ValueError):
    pass


@dataclass(frozen=True)
class ParamCurveSpec:
    """``circle`` of radius ``r``, or the torus knot

    ``((R + r cos(q t)) cos(p t), (R + r cos(q t)) sin(p t), r sin(q t))``.
    """

    kind: str
    p: int = 0
    q: int = 0
    R: float = 0.0
    r: float = 1.0

    def __post_init__(self):
        if self.kind == "circle":
            if not self.r > 0:
                raise ValueError("circle radius must be positive")
        elif self.kind == "torus":
            if math.gcd(self.p, self.q) != 1 or self.p < 1 or self.q < 1:
                raise ValueError("torus knot needs coprime positive p, q")
            if not self.R > self.r > 0:
                raise ValueError("torus knot needs R > r > 0")
        else:
            raise ValueError(f"unknown model curve {self.kind!r}")

    @classmethod
    def circle(cls, r: float = 1.0) -> ParamCurveSpec:
        return cls("circle", r=r)

    @classmethod
    def torus(cls, p: int = 2, q: int = 3, R: float = 2.0, r: float = 1.0) -> ParamCurveSpec:
        return cls("torus", p, q, R, r)

    @classmethod
    def parse(cls, text: str) -> ParamCurveSpec:
        """``circle``, ``circle:<r>`` or ``torus:p,q,R,r``."""
        head, _, arg = text.strip().partition(":")
        if head == "circle":
            return cls.circle(float(arg) if arg else 1.0)
        if head == "torus":
            if not arg:
                return cls.torus()
            parts = arg.split(",")
            if len(parts) != 4:
                raise ValueError("torus spec is torus:p,q,R,r")
            return cls.torus(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))
        raise ValueError(f"unknown model curve {text!r}")

    def __str__(self) -> str:
        if self.kind == "circle":
            return f"circle:{self.r:g}"
        return f"torus:{self.p},{self.q},{self.R:g},{self.r:g}"

    @property
    def knot_type(self) -> str:
        if self.kind == "circle" or self.p == 1 or self.q == 1:
            return "unknot"
        if {self.p, self.q} == {2, 3}:
            return "trefoil"
        return f"T({self.p},{self.q})"

    @property
    def min_vertices(self) -> int:
        # suggested sampling density; the embedding check is what decides
        return 3 if self.kind == "circle" else max(3, 8 * (self.p + self.q))

    def points(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "circle":
            return np.c_[self.r * np.cos(t), self.r * np.sin(t), np.zeros_like(t)]
        rad = self.R + self.r * np.cos(self.q * t)
        return np.c_[rad * np.cos(self.p * t), rad * np.sin(self.p * t),
                     self.r * np.sin(self.q * t)]


def inscribed_polygon(spec: ParamCurveSpec, n: int) -> PolygonalCurve:
    """Vertices at ``t_k = 2 pi k / n``; raises :class:`TooCoarseError` if not embedded."""
    if n < 3:
        raise TooCoarseError("a polygon needs at least 3 vertices")
    if n < spec.min_vertices:
        warnings.warn(f"n={n} is below the suggested {spec.min_vertices} vertices for {spec}",
                      stacklevel=2)
    t = 2.0 * math.pi * np.arange(n) / n
    try:
        curve = PolygonalCurve(spec.points(t), f"{spec}/n={n}", spec.knot_type)
    except ValueError as exc:
        raise TooCoarseError(f"too coarse: {exc}") from None
    ok, witness = is_embedded(curve)
    if not ok:
        raise TooCoarseError(f"too coarse: n={n} polygon of {spec} self-intersects "
                             f"at edges {witness}")
    return curve


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    d_value: float
    thickness: float
    crad: float
    pack: float
    rho: float
    rop: float
    residual: float


@dataclass(frozen=True)
class ConvergenceTable:
    spec: ParamCurveSpec
    functional: SizeFunctionalSpec
    rows: tuple[ConvergenceRow, ...]

    def __post_init__(self):
        ns = [r.n for r in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n must be strictly increasing")

    @property
    def crad_increments(self) -> np.ndarray:
        """``|crad(n_{k+1}) - crad(n_k)|`` for consecutive rows."""
        c = np.array([r.crad for r in self.rows])
        return np.abs(np.diff(c))


def _row(spec, functional, n, cfg):
    rep = report(inscribed_polygon(spec, n), functional, cfg)
    return ConvergenceRow(n, rep.d_value, rep.thickness, rep.crad, rep.pack, rep.rho,
                          rep.rop, rep.factorization_residual)


def convergence_study(spec: ParamCurveSpec, functional: SizeFunctionalSpec, n_list,
                      cfg: QuadratureConfig | None = None, workers: int = 1) -> ConvergenceTable:
    n_list = sorted(int(n) for n in n_list)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_row, [spec] * len(n_list), [functional] * len(n_list),
                                 n_list, [cfg] * len(n_list)))
    else:
        rows = [_row(spec, functional, n, cfg) for n in n_list]
    return ConvergenceTable(spec, functional, tuple(rows))

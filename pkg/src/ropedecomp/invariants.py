"""Density, compression radius, packing ratio and ropelength of a representative."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .curve import PolygonalCurve, length
from .size import (QuadratureConfig, SizeFunctionalSpec, diameter, evaluate,
                   min_enclosing_radius)
from .thickness import polygonal_thickness, thickness as _thickness

RESIDUAL_TOL = 1e-12
SLACK_TOL = 1e-9


class InequalityViolation(RuntimeError):
    """A proven inequality failed numerically: some measurement is wrong."""


@dataclass(frozen=True)
class InvariantReport:
    functional: SizeFunctionalSpec
    len: float
    d_value: float
    thickness: float
    rho: float
    crad: float
    pack: float
    rop: float
    factorization_residual: float
    name: str | None = None

    @classmethod
    def from_triple(cls, functional: SizeFunctionalSpec, len_: float, d_value: float,
                    thickness: float, name: str | None = None) -> InvariantReport:
        """Build every ratio from one (length, size, thickness) triple."""
        if not (len_ > 0 and d_value > 0 and thickness > 0):
            raise ValueError(f"length, size and thickness must be positive: "
                             f"{len_}, {d_value}, {thickness}")
        rho = len_ / d_value
        crad = d_value / thickness
        rop = len_ / thickness
        residual = abs(rop - rho * crad) / rop
        if residual > RESIDUAL_TOL:
            raise InequalityViolation(f"factorization residual {residual:.3e} exceeds 1e-12")
        return cls(functional, len_, d_value, thickness, rho, crad, thickness / d_value,
                   rop, residual, name)

    def csv_row(self) -> list:
        return [self.name or "", str(self.functional), self.len, self.d_value,
                self.thickness, self.rho, self.crad, self.pack, self.rop,
                self.factorization_residual]


CSV_HEADER = ["name", "functional", "len", "d", "thi", "rho", "crad", "pack", "rop", "residual"]


def artificial_size(curve: PolygonalCurve, thickness: float | None = None) -> float:
    """``Thi * (1 + exp(-Rop))``: size functional whose compression radius is ``1 + exp(-Rop)``."""
    thi = _thickness(curve) if thickness is None else thickness
    if not thi > 0:
        raise ValueError("artificial size needs positive thickness")
    return thi * (1.0 + math.exp(-length(curve) / thi))


def report(curve: PolygonalCurve, functional: SizeFunctionalSpec,
           cfg: QuadratureConfig | None = None, thickness: float | None = None) -> InvariantReport:
    thi = polygonal_thickness(curve).thickness if thickness is None else thickness
    d = evaluate(functional, curve, cfg, thickness=thi)
    return InvariantReport.from_triple(functional, length(curve), d, thi, curve.name)


@dataclass(frozen=True)
class ComparisonCheck:
    """The two sandwiches coming from ``diam / 2 <= R_min <= diam``."""

    len_over_diam: float
    len_over_rmin: float
    two_len_over_diam: float
    half_diam_over_thi: float
    rmin_over_thi: float
    diam_over_thi: float


def comparison_check(curve: PolygonalCurve, cfg: QuadratureConfig | None = None,
                     thickness: float | None = None, rtol: float = 1e-12) -> ComparisonCheck:
    l = length(curve)
    diam = diameter(curve)
    r = min_enclosing_radius(curve)[0]
    thi = polygonal_thickness(curve).thickness if thickness is None else thickness
    out = ComparisonCheck(l / diam, l / r, 2 * l / diam, 0.5 * diam / thi, r / thi, diam / thi)
    slack = rtol * out.two_len_over_diam
    if not (out.len_over_diam <= out.len_over_rmin + slack
            and out.len_over_rmin <= out.two_len_over_diam + slack):
        raise InequalityViolation(f"Len/diam <= Len/R_min <= 2 Len/diam violated: {out}")
    slack = rtol * out.diam_over_thi
    if not (out.half_diam_over_thi <= out.rmin_over_thi + slack
            and out.rmin_over_thi <= out.diam_over_thi + slack):
        raise InequalityViolation(f"diam/2Thi <= R_min/Thi <= diam/Thi violated: {out}")
    return out


@dataclass(frozen=True)
class EnsembleCheck:
    min_rop: float
    min_rho: float
    min_crad: float
    slack: float


def ensemble_inequality_check(reports, tol: float = SLACK_TOL) -> EnsembleCheck:
    """Empirical minima over an ensemble and the slack ``min_rop - min_rho * min_crad``.

    All reports must share one size functional. A slack below ``-tol``
    cannot happen for consistent measurements and raises.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("ensemble is empty")
    kinds = {str(r.functional) for r in reports}
    if len(kinds) != 1:
        raise ValueError(f"ensemble mixes size functionals: {sorted(kinds)}")
    rop = min(r.rop for r in reports)
    rho = min(r.rho for r in reports)
    crad = min(r.crad for r in reports)
    out = EnsembleCheck(rop, rho, crad, rop - rho * crad)
    if out.slack < -tol:
        raise InequalityViolation(f"ensemble slack {out.slack:.3e} is negative")
    return out

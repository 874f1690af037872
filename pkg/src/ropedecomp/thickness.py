"""Polygonal thickness: min of vertex MinRad and half the doubly critical self-distance."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .curve import PolygonalCurve


class PiTurnVertexError(ValueError):
    pass


@dataclass(frozen=True)
class ThicknessBreakdown:
    """All pieces of the polygonal thickness with their witnesses.

    ``dcsd`` is ``inf`` when no doubly critical pair exists (then
    ``dcsd_witness`` is None and MinRad alone sets the thickness). Only
    closest-point pairs of edge pairs (and vertex-to-foot pairs on adjacent
    edges) are candidates, so saddle-type critical pairs such as vertex and
    opposite midpoint of an odd regular polygon are not reported.
    ``min_pair_distance`` is the smallest distance between non-adjacent
    edges, a diagnostic lower bound for ``dcsd``.
    """

    min_rad: float
    min_rad_vertex: int
    dcsd: float
    dcsd_witness: tuple[tuple[int, float], tuple[int, float]] | None
    thickness: float
    min_pair_distance: float

    def witness_points(self, curve: PolygonalCurve):
        if self.dcsd_witness is None:
            return None
        v = curve.vertices
        pts = []
        for e, s in self.dcsd_witness:
            a, b = v[e], v[(e + 1) % curve.n]
            pts.append(a + s * (b - a))
        return pts[0], pts[1]


def min_rad(curve: PolygonalCurve):
    """Smallest vertex MinRad and the vertex attaining it.

    Straight vertices contribute ``inf``; a doubled-back vertex is an error.
    """
    v = curve.vertices
    cos_turn = K.turning_cosines(v)
    bad = np.flatnonzero(cos_turn <= -1.0 + 1e-12)
    if bad.size:
        raise PiTurnVertexError(f"pi-turn vertex {int(bad[0])}")
    value, idx = K.min_rad(v)
    return float(value), int(idx)


def dcsd(curve: PolygonalCurve):
    """Doubly critical self-distance with its witness ``((e1, s1), (e2, s2))``."""
    value, e1, s1, e2, s2, _, _ = K.dcsd(curve.vertices, -1.0)
    if e1 < 0:
        return math.inf, None
    return float(value), ((int(e1), float(s1)), (int(e2), float(s2)))


def polygonal_thickness(curve: PolygonalCurve) -> ThicknessBreakdown:
    mr, mr_idx = min_rad(curve)
    value, e1, s1, e2, s2, raw, _ = K.dcsd(curve.vertices, -1.0)
    witness = None if e1 < 0 else ((int(e1), float(s1)), (int(e2), float(s2)))
    return ThicknessBreakdown(
        min_rad=mr,
        min_rad_vertex=mr_idx,
        dcsd=float(value),
        dcsd_witness=witness,
        thickness=min(mr, 0.5 * float(value)),
        min_pair_distance=float(raw),
    )


def thickness(curve: PolygonalCurve) -> float:
    return float(K.thickness_value(curve.vertices))

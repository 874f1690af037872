"""Closed polygonal curves in 3-space: validation, isometries, JSON I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K

EMBED_TOL = 1e-9
# turning angle counts as pi when cos(theta) <= -1 + PI_TURN_TOL
PI_TURN_TOL = 1e-12


class CurveError(ValueError):
    """Invalid curve input."""


class CurveFormatError(CurveError):
    pass


class DegenerateEdgeError(CurveError):
    def __init__(self, index: int):
        super().__init__(f"degenerate edge {index}: consecutive vertices coincide")
        self.index = index


class PiTurnError(CurveError):
    def __init__(self, index: int):
        super().__init__(f"pi-turn vertex {index}: edges double back")
        self.index = index


class SelfIntersectionError(CurveError):
    def __init__(self, pair: tuple[int, int]):
        super().__init__(f"self-intersection between edges {pair[0]} and {pair[1]}")
        self.pair = pair


@dataclass(frozen=True, eq=False)
class PolygonalCurve:
    """Closed polygon; the edge from the last vertex back to the first is implicit.

    Construction checks vertex count, finiteness, positive edge lengths and
    the absence of pi-turns. Embeddedness is checked by :func:`is_embedded`
    (and by :func:`load_curve`), since it costs O(n^2).
    """

    vertices: np.ndarray
    name: str | None = None
    knot_type: str | None = None
    _edge_lengths: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[1] != 3:
            raise CurveFormatError(f"vertices must have shape (n, 3), got {v.shape}")
        if v.shape[0] < 3:
            raise CurveFormatError("a closed polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise CurveFormatError("vertex coordinates must be finite")
        v.setflags(write=False)
        lengths = K.edge_lengths(v)
        bad = np.flatnonzero(lengths <= 0.0)
        if bad.size:
            raise DegenerateEdgeError(int(bad[0]))
        cosines = K.turning_cosines(v)
        bad = np.flatnonzero(cosines <= -1.0 + PI_TURN_TOL)
        if bad.size:
            raise PiTurnError(int(bad[0]))
        lengths.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "_edge_lengths", lengths)

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    @property
    def edge_lengths(self) -> np.ndarray:
        return self._edge_lengths

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of every edge, each of shape ``(n, 3)``."""
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def reversed(self) -> PolygonalCurve:
        return PolygonalCurve(self.vertices[::-1], self.name, self.knot_type)

    def with_vertices(self, vertices) -> PolygonalCurve:
        return PolygonalCurve(vertices, self.name, self.knot_type)


@dataclass(frozen=True)
class Isometry:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation a 3-vector")
        if not np.allclose(r.T @ r, np.eye(3), rtol=0.0, atol=1e-12):
            raise ValueError("rotation columns are not orthonormal to 1e-12")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> Isometry:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def random(cls, rng: np.random.Generator, reflect: bool = False,
               shift: float = 1.0) -> Isometry:
        q, r = np.linalg.qr(rng.normal(size=(3, 3)))
        q = q * np.sign(np.diag(r))
        if (np.linalg.det(q) < 0) != reflect:
            q[:, 0] = -q[:, 0]
        return cls(q, shift * rng.normal(size=3))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.rotation.T + self.translation


def transform(curve: PolygonalCurve, g: Isometry, scale: float = 1.0) -> PolygonalCurve:
    """Map every vertex ``x`` to ``scale * (R x) + t``."""
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    v = scale * (curve.vertices @ g.rotation.T) + g.translation
    return curve.with_vertices(v)


def length(curve: PolygonalCurve) -> float:
    return float(curve.edge_lengths.sum())


def arclength_barycenter(curve: PolygonalCurve) -> np.ndarray:
    """Centre of mass of the curve with uniform density per unit length."""
    a, b = curve.edges()
    w = curve.edge_lengths
    return (w[:, None] * 0.5 * (a + b)).sum(axis=0) / w.sum()


def is_embedded(curve: PolygonalCurve, tol: float = EMBED_TOL):
    """Check simplicity of the polygon.

    Non-adjacent edges must stay more than ``tol * diameter`` apart and
    adjacent edges may meet only in their shared vertex.

    Returns
    -------
    ok : bool
    witness : tuple of int or None
        Offending edge pair when ``ok`` is False.
    """
    v = curve.vertices
    tol_abs = tol * K.vertex_diameter(v)
    i, j = K.embedding_witness(v, tol_abs, PI_TURN_TOL)
    if i < 0:
        return True, None
    return False, (int(i), int(j))


def curve_to_dict(curve: PolygonalCurve) -> dict:
    out = {}
    if curve.name is not None:
        out["name"] = curve.name
    if curve.knot_type is not None:
        out["knot_type"] = curve.knot_type
    out["vertices"] = [[float(x) for x in row] for row in curve.vertices]
    return out


def curve_from_dict(data: dict, check_embedding: bool = True) -> PolygonalCurve:
    if not isinstance(data, dict) or "vertices" not in data:
        raise CurveFormatError("curve JSON must be an object with a 'vertices' list")
    verts = data["vertices"]
    if not isinstance(verts, list) or not all(
            isinstance(row, list) and len(row) == 3 for row in verts):
        raise CurveFormatError("'vertices' must be a list of [x, y, z] triples")
    try:
        arr = np.array(verts, dtype=float)
    except (TypeError, ValueError) as exc:
        raise CurveFormatError(f"non-numeric vertex coordinate: {exc}") from None
    curve = PolygonalCurve(arr, data.get("name"), data.get("knot_type"))
    if check_embedding:
        ok, witness = is_embedded(curve)
        if not ok:
            raise SelfIntersectionError(witness)
    return curve


def load_curve(path, format: str = "json") -> PolygonalCurve:
    """Read a curve file and verify every curve invariant, embeddedness included."""
    if format != "json":
        raise CurveFormatError(f"unsupported curve format {format!r}")
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CurveFormatError(f"parse error in {path}: {exc}") from None
    return curve_from_dict(data)


def save_curve(curve: PolygonalCurve, path) -> None:
    # repr of a float round-trips exactly
    Path(path).write_text(json.dumps(curve_to_dict(curve), indent=1) + "\n")

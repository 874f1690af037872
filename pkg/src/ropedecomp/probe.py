"""Distortion estimates and trunk / supertrunk direction sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .curve import PolygonalCurve, length
from .invariants import InequalityViolation
from .size import diameter, min_enclosing_radius

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
REGULAR_TOL = 1e-10
PERTURB = 1e-8
BOUND_TOL = 1e-9


class DegenerateDirectionError(ValueError):
    pass


# ---------------------------------------------------------------- distortion

@njit(cache=True)
def _ratio(V, cum, total, e1, u1, e2, u2):
    n = V.shape[0]
    a = V[e1]
    b = V[(e1 + 1) % n]
    c = V[e2]
    d = V[(e2 + 1) % n]
    dx = (c[0] + u2 * (d[0] - c[0])) - (a[0] + u1 * (b[0] - a[0]))
    dy = (c[1] + u2 * (d[1] - c[1])) - (a[1] + u1 * (b[1] - a[1]))
    dz = (c[2] + u2 * (d[2] - c[2])) - (a[2] + u1 * (b[2] - a[2]))
    chord = math.sqrt(dx * dx + dy * dy + dz * dz)
    if chord <= 0.0:
        return 0.0
    s1 = cum[e1] + u1 * (cum[e1 + 1] - cum[e1])
    s2 = cum[e2] + u2 * (cum[e2 + 1] - cum[e2])
    arc = abs(s2 - s1)
    arc = min(arc, total - arc)
    return arc / chord


@njit(cache=True)
def _row_maxima(X, s, total):
    """For every sample ``i``, the best partner ``j`` and the ratio it achieves."""
    N = X.shape[0]
    best = np.zeros(N)
    arg = np.zeros(N, dtype=np.int64)
    for i in range(N):
        bi = 0.0
        bj = i
        for j in range(N):
            if j == i:
                continue
            dx = X[j, 0] - X[i, 0]
            dy = X[j, 1] - X[i, 1]
            dz = X[j, 2] - X[i, 2]
            chord = math.sqrt(dx * dx + dy * dy + dz * dz)
            if chord <= 0.0:
                continue
            arc = abs(s[j] - s[i])
            arc = min(arc, total - arc)
            r = arc / chord
            if r > bi:
                bi = r
                bj = j
        best[i] = bi
        arg[i] = bj
    return best, arg


@njit(cache=True)
def _golden_refine(V, cum, total, e1, u1, e2, u2, iters, sweeps):
    """Coordinate-wise golden-section ascent on the two edge parameters."""
    best = _ratio(V, cum, total, e1, u1, e2, u2)
    bu1 = u1
    bu2 = u2
    for _ in range(sweeps):
        for coord in range(2):
            lo = 0.0
            hi = 1.0
            x1 = hi - GOLDEN * (hi - lo)
            x2 = lo + GOLDEN * (hi - lo)
            if coord == 0:
                f1 = _ratio(V, cum, total, e1, x1, e2, bu2)
                f2 = _ratio(V, cum, total, e1, x2, e2, bu2)
            else:
                f1 = _ratio(V, cum, total, e1, bu1, e2, x1)
                f2 = _ratio(V, cum, total, e1, bu1, e2, x2)
            for _k in range(iters):
                if f1 < f2:
                    lo = x1
                    x1 = x2
                    f1 = f2
                    x2 = lo + GOLDEN * (hi - lo)
                    if coord == 0:
                        f2 = _ratio(V, cum, total, e1, x2, e2, bu2)
                    else:
                        f2 = _ratio(V, cum, total, e1, bu1, e2, x2)
                else:
                    hi = x2
                    x2 = x1
                    f2 = f1
                    x1 = hi - GOLDEN * (hi - lo)
                    if coord == 0:
                        f1 = _ratio(V, cum, total, e1, x1, e2, bu2)
                    else:
                        f1 = _ratio(V, cum, total, e1, bu1, e2, x1)
            x = x1 if f1 >= f2 else x2
            f = max(f1, f2)
            if f > best:
                best = f
                if coord == 0:
                    bu1 = x
                else:
                    bu2 = x
    return best, bu1, bu2


@njit(cache=True)
def _antipode(cum, total, e1, u1):
    s = cum[e1] + u1 * (cum[e1 + 1] - cum[e1]) + 0.5 * total
    if s >= total:
        s -= total
    n = cum.shape[0] - 1
    e = np.searchsorted(cum, s, side="right") - 1
    e = min(max(e, 0), n - 1)
    u = (s - cum[e]) / (cum[e + 1] - cum[e])
    return e, min(max(u, 0.0), 1.0)


@njit(cache=True)
def _ridge_refine(V, cum, total, e1, u1, iters):
    """Golden-section search over pairs exactly half the length apart.

    The shorter-arc distance has a kink on this ridge, which stalls the
    coordinate-wise search.
    """
    lo = 0.0
    hi = 1.0
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    e2, u2 = _antipode(cum, total, e1, x1)
    f1 = _ratio(V, cum, total, e1, x1, e2, u2)
    e2, u2 = _antipode(cum, total, e1, x2)
    f2 = _ratio(V, cum, total, e1, x2, e2, u2)
    for _k in range(iters):
        if f1 < f2:
            lo = x1
            x1 = x2
            f1 = f2
            x2 = lo + GOLDEN * (hi - lo)
            e2, u2 = _antipode(cum, total, e1, x2)
            f2 = _ratio(V, cum, total, e1, x2, e2, u2)
        else:
            hi = x2
            x2 = x1
            f2 = f1
            x1 = hi - GOLDEN * (hi - lo)
            e2, u2 = _antipode(cum, total, e1, x1)
            f1 = _ratio(V, cum, total, e1, x1, e2, u2)
    x = x1 if f1 >= f2 else x2
    e2, u2 = _antipode(cum, total, e1, x)
    return max(f1, f2), x, e2, u2


@dataclass(frozen=True)
class DistortionEstimate:
    """Certified lower bound on the distortion and the pair realizing it.

    Each witness entry is ``(edge index, edge parameter)``.
    """

    value: float
    witness: tuple[tuple[int, float], tuple[int, float]]


def _locate(cum, s):
    e = np.searchsorted(cum, s, side="right") - 1
    e = np.clip(e, 0, len(cum) - 2)
    u = (s - cum[e]) / (cum[e + 1] - cum[e])
    return e, np.clip(u, 0.0, 1.0)


def distortion(curve: PolygonalCurve, samples_per_edge: int = 16, refine_iters: int = 40,
               top: int = 64, sweeps: int = 3) -> DistortionEstimate:
    """Lower bound for ``sup d_arc(p, q) / |p - q|`` over pairs of curve points.

    Candidate pairs: all pairs of ``samples_per_edge`` equispaced samples per
    edge, plus every sample paired with the point half the length away.
    The ``top`` best pairs are then refined by golden-section search, both
    coordinate-wise and along the half-length ridge. Every
    reported value is the ratio of an actual pair, so the result never
    exceeds the true distortion.
    """
    if samples_per_edge < 2:
        raise ValueError("samples_per_edge must be at least 2")
    v = curve.vertices
    n = curve.n
    m = samples_per_edge
    cum = np.concatenate([[0.0], np.cumsum(curve.edge_lengths)])
    total = float(cum[-1])
    edge = np.repeat(np.arange(n), m)
    u = np.tile(np.arange(m) / m, n)
    a, b = v[edge], v[(edge + 1) % n]
    x = a + u[:, None] * (b - a)
    s = cum[edge] + u * curve.edge_lengths[edge]

    row_best, row_arg = _row_maxima(x, s, total)
    cands = [(float(row_best[i]), int(edge[i]), float(u[i]),
              int(edge[row_arg[i]]), float(u[row_arg[i]])) for i in range(len(x))]
    pe, pu = _locate(cum, np.mod(s + 0.5 * total, total))
    for i in range(len(x)):
        r = _ratio(v, cum, total, int(edge[i]), float(u[i]), int(pe[i]), float(pu[i]))
        cands.append((r, int(edge[i]), float(u[i]), int(pe[i]), float(pu[i])))
    # stable order: value desc, then indices, so ties resolve deterministically
    cands.sort(key=lambda c: (-c[0], c[1], c[2], c[3], c[4]))
    best = cands[0]
    for r, e1, u1, e2, u2 in cands[:top]:
        val, ru1, ru2 = _golden_refine(v, cum, total, e1, u1, e2, u2, refine_iters, sweeps)
        if val > best[0]:
            best = (val, e1, ru1, e2, ru2)
        val, ru1, re2, ru2 = _ridge_refine(v, cum, total, e1, u1, refine_iters)
        if val > best[0]:
            best = (val, e1, ru1, int(re2), ru2)
    return DistortionEstimate(best[0], ((best[1], best[2]), (best[3], best[4])))


@dataclass(frozen=True)
class DistortionBounds:
    distortion: float
    len_over_2diam: float
    len_over_4rmin: float


def distortion_bounds_report(curve: PolygonalCurve, samples_per_edge: int = 16,
                             estimate: DistortionEstimate | None = None) -> DistortionBounds:
    """Distortion estimate next to its two density lower bounds (which must hold)."""
    est = estimate or distortion(curve, samples_per_edge)
    l = length(curve)
    out = DistortionBounds(est.value, l / (2 * diameter(curve)),
                           l / (4 * min_enclosing_radius(curve)[0]))
    if est.value < out.len_over_2diam - BOUND_TOL or est.value < out.len_over_4rmin - BOUND_TOL:
        raise InequalityViolation(f"distortion estimate below its density bound: {out}")
    return out


# --------------------------------------------------------------------- trunk

@njit(cache=True)
def _trunk_counts(V, dirs, tol_abs):
    """Max level-crossing count per direction, ``-1`` where heights are not distinct."""
    n = V.shape[0]
    out = np.empty(dirs.shape[0], dtype=np.int64)
    h = np.empty(n)
    for k in range(dirs.shape[0]):
        for i in range(n):
            h[i] = V[i, 0] * dirs[k, 0] + V[i, 1] * dirs[k, 1] + V[i, 2] * dirs[k, 2]
        order = np.argsort(h)
        ok = True
        for r in range(n - 1):
            if h[order[r + 1]] - h[order[r]] <= tol_abs:
                ok = False
                break
        if not ok:
            out[k] = -1
            continue
        rank = np.empty(n, dtype=np.int64)
        for r in range(n):
            rank[order[r]] = r
        # gap g lies between sorted heights g and g + 1
        diff = np.zeros(n, dtype=np.int64)
        for i in range(n):
            ra = rank[i]
            rb = rank[(i + 1) % n]
            if ra > rb:
                ra, rb = rb, ra
            diff[ra] += 1
            diff[rb] -= 1
        run = 0
        best = 0
        for g in range(n - 1):
            run += diff[g]
            if run > best:
                best = run
        out[k] = best
    return out


def trunk_direction(curve: PolygonalCurve, v) -> int:
    """Most intersections of the curve with a regular level plane ``{x . v = t}``."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    tol_abs = REGULAR_TOL * diameter(curve)
    c = int(_trunk_counts(curve.vertices, v[None, :], tol_abs)[0])
    if c < 0:
        raise DegenerateDirectionError("degenerate direction: vertex heights not distinct")
    return c


@dataclass(frozen=True)
class DirectionGrid:
    directions: np.ndarray
    kind: str
    spacing: float

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        if d.ndim != 2 or d.shape[1] != 3 or len(d) == 0:
            raise ValueError("directions must be a nonempty (N, 3) array")
        if not np.allclose(np.linalg.norm(d, axis=1), 1.0, rtol=0.0, atol=1e-12):
            raise ValueError("directions must be unit vectors")
        object.__setattr__(self, "directions", d)

    @classmethod
    def fibonacci(cls, count: int) -> DirectionGrid:
        if count < 32:
            raise ValueError("a direction grid needs at least 32 directions")
        k = np.arange(count)
        z = 1.0 - (2.0 * k + 1.0) / count
        r = np.sqrt(1.0 - z * z)
        phi = k * math.pi * (3.0 - math.sqrt(5.0))
        d = np.c_[r * np.cos(phi), r * np.sin(phi), z]
        d /= np.linalg.norm(d, axis=1)[:, None]
        return cls(d, f"fibonacci-sphere({count})", math.sqrt(4.0 * math.pi / count))

    @classmethod
    def refined(cls, center, cap: float, count: int = 64) -> DirectionGrid:
        """Fibonacci-distributed directions in the spherical cap of half-angle ``cap``."""
        c = np.asarray(center, dtype=float)
        c = c / np.linalg.norm(c)
        helper = np.eye(3)[int(np.argmin(np.abs(c)))]
        e1 = np.cross(c, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(c, e1)
        k = np.arange(count)
        z = 1.0 - (1.0 - math.cos(cap)) * (k + 0.5) / count
        r = np.sqrt(1.0 - z * z)
        phi = k * math.pi * (3.0 - math.sqrt(5.0))
        d = (z[:, None] * c + (r * np.cos(phi))[:, None] * e1
             + (r * np.sin(phi))[:, None] * e2)
        d /= np.linalg.norm(d, axis=1)[:, None]
        return cls(d, f"refined(cap={cap:.6g})", cap / math.sqrt(count))

    def rotated(self, rotation) -> DirectionGrid:
        return DirectionGrid(self.directions @ np.asarray(rotation).T, self.kind, self.spacing)


@dataclass(frozen=True)
class TrunkProfile:
    """Per-direction level-crossing maxima.

    ``min_v`` bounds the trunk from above and ``max_v`` bounds the
    supertrunk-type quantity from below (finite grids certify nothing more).
    """

    directions: np.ndarray
    multiplicities: np.ndarray
    min_v: int
    max_v: int
    min_direction: np.ndarray
    max_direction: np.ndarray


def _evaluate_grid(curve: PolygonalCurve, dirs: np.ndarray, index_offset: int = 0):
    tol_abs = REGULAR_TOL * diameter(curve)
    dirs = np.array(dirs, dtype=float)
    counts = _trunk_counts(curve.vertices, dirs, tol_abs)
    for k in np.flatnonzero(counts < 0):
        rng = np.random.Generator(np.random.Philox(key=index_offset + int(k)))
        for _ in range(32):
            w = dirs[k] + PERTURB * rng.normal(size=3)
            w /= np.linalg.norm(w)
            c = _trunk_counts(curve.vertices, w[None, :], tol_abs)[0]
            if c >= 0:
                dirs[k], counts[k] = w, c
                break
        else:
            raise DegenerateDirectionError(f"could not perturb direction {index_offset + k} "
                                           "to a regular one")
    return dirs, counts


def trunk_sweep(curve: PolygonalCurve, grid: DirectionGrid, refine_levels: int = 1,
                cap_points: int = 64) -> TrunkProfile:
    dirs, counts = _evaluate_grid(curve, grid.directions)
    all_dirs = [dirs]
    all_counts = [counts]
    cap = grid.spacing
    for level in range(refine_levels):
        d = np.concatenate(all_dirs)
        c = np.concatenate(all_counts)
        centers = (d[int(np.argmax(c))], d[int(np.argmin(c))])
        for center in centers:
            sub = DirectionGrid.refined(center, cap, cap_points)
            offset = sum(len(x) for x in all_dirs)
            sd, sc = _evaluate_grid(curve, sub.directions, offset)
            all_dirs.append(sd)
            all_counts.append(sc)
        cap = sub.spacing
    d = np.concatenate(all_dirs)
    c = np.concatenate(all_counts)
    imin, imax = int(np.argmin(c)), int(np.argmax(c))
    return TrunkProfile(d, c, int(c[imin]), int(c[imax]), d[imin], d[imax])

"""Compiled geometry kernels shared by the curve, thickness, size and optimize modules.

Everything here works on raw ``(n, 3)`` float64 vertex arrays of a closed
polygon (edge ``i`` runs from vertex ``i`` to vertex ``(i + 1) % n``).
Vectors inside the kernels are plain 3-tuples so hot loops never allocate.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

PARALLEL_EPS = 1e-14
CRIT_TOL = 1e-8


@njit(cache=True, inline="always")
def _pt(V, i):
    return (V[i, 0], V[i, 1], V[i, 2])


@njit(cache=True, inline="always")
def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


@njit(cache=True, inline="always")
def _add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


@njit(cache=True, inline="always")
def _scale(s, a):
    return (s * a[0], s * a[1], s * a[2])


@njit(cache=True, inline="always")
def _axpy(a, s, d):
    # a + s * d
    return (a[0] + s * d[0], a[1] + s * d[1], a[2] + s * d[2])


@njit(cache=True, inline="always")
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True, inline="always")
def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


@njit(cache=True, inline="always")
def _norm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


@njit(cache=True, inline="always")
def _clamp01(x):
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@njit(cache=True)
def segment_params(p1, q1, p2, q2):
    """Closest-point parameters ``(s, t)`` of segments ``p1q1`` and ``p2q2``.

    Both segments must have positive length. For parallel segments with
    overlapping projections the midpoint of the overlap is returned, so both
    points are interior whenever that is possible.
    """
    d1 = _sub(q1, p1)
    d2 = _sub(q2, p2)
    r = _sub(p1, p2)
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b
    if denom > PARALLEL_EPS * a * e:
        s = _clamp01((b * f - c * e) / denom)
        t = (b * s + f) / e
        if t < 0.0:
            t = 0.0
            s = _clamp01(-c / a)
        elif t > 1.0:
            t = 1.0
            s = _clamp01((b - c) / a)
        return s, t
    # parallel: project segment 2 onto segment 1
    sp = -c / a
    sq = (b - c) / a
    lo = min(sp, sq)
    hi = max(sp, sq)
    lo_c = max(lo, 0.0)
    hi_c = min(hi, 1.0)
    if lo_c <= hi_c:
        s = 0.5 * (lo_c + hi_c)
    elif hi < 0.0:
        s = 0.0
    else:
        s = 1.0
    x = _axpy(p1, s, d1)
    t = _clamp01(_dot(_sub(x, p2), d2) / e)
    return s, t


@njit(cache=True)
def segment_distance(p1, q1, p2, q2):
    s, t = segment_params(p1, q1, p2, q2)
    return _norm(_sub(_axpy(p2, t, _sub(q2, p2)), _axpy(p1, s, _sub(q1, p1))))


@njit(cache=True)
def edge_lengths(V):
    n = V.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = _norm(_sub(_pt(V, (i + 1) % n), _pt(V, i)))
    return out


@njit(cache=True)
def curve_length(V):
    n = V.shape[0]
    total = 0.0
    for i in range(n):
        total += _norm(_sub(_pt(V, (i + 1) % n), _pt(V, i)))
    return total


@njit(cache=True)
def vertex_diameter(V):
    n = V.shape[0]
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            dx = V[j, 0] - V[i, 0]
            dy = V[j, 1] - V[i, 1]
            dz = V[j, 2] - V[i, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 > best:
                best = d2
    return math.sqrt(best)


@njit(cache=True)
def turning_cosines(V):
    """Cosine of the turning angle at every vertex (1 = straight, -1 = doubled back)."""
    n = V.shape[0]
    out = np.empty(n)
    for i in range(n):
        a = _sub(_pt(V, i), _pt(V, (i - 1) % n))
        b = _sub(_pt(V, (i + 1) % n), _pt(V, i))
        out[i] = _dot(a, b) / math.sqrt(_dot(a, a) * _dot(b, b))
    return out


@njit(cache=True)
def min_rad(V):
    """Minimum over vertices of ``(min adjacent edge / 2) / tan(turn / 2)``."""
    n = V.shape[0]
    best = np.inf
    idx = -1
    for i in range(n):
        a = _sub(_pt(V, i), _pt(V, (i - 1) % n))
        b = _sub(_pt(V, (i + 1) % n), _pt(V, i))
        la = _norm(a)
        lb = _norm(b)
        sin_t = _norm(_cross(a, b))
        ab = _dot(a, b)
        if sin_t <= 0.0 and ab > 0.0:
            continue
        # tan(theta / 2) = |a x b| / (|a||b| + a.b)
        r = 0.5 * min(la, lb) * (la * lb + ab) / sin_t
        if r < best:
            best = r
            idx = i
    return best, idx


@njit(cache=True)
def _vertex_critical(V, k, w):
    """Whether vertex ``k`` is a critical point of the distance to ``V[k] + w``.

    Critical means the one-sided derivatives along the two incident edges do
    not both point downhill-and-uphill in the same sense, i.e. ``w`` makes
    angles of the same kind (both non-acute or both non-obtuse) with the two
    edge directions leaving ``k``.
    """
    n = V.shape[0]
    x = _pt(V, k)
    a = _sub(_pt(V, (k - 1) % n), x)
    b = _sub(_pt(V, (k + 1) % n), x)
    lw = _norm(w)
    ca = _dot(w, a) / (lw * _norm(a))
    cb = _dot(w, b) / (lw * _norm(b))
    if abs(ca) < CRIT_TOL or abs(cb) < CRIT_TOL:
        return True
    return ca * cb > 0.0


@njit(cache=True)
def _point_critical(V, e, s, w):
    """Criticality of the point at parameter ``s`` on edge ``e`` w.r.t. ``x + w``."""
    n = V.shape[0]
    if s == 0.0:
        return _vertex_critical(V, e, w)
    if s == 1.0:
        return _vertex_critical(V, (e + 1) % n, w)
    d = _sub(_pt(V, (e + 1) % n), _pt(V, e))
    c = _dot(w, d) / math.sqrt(_dot(w, w) * _dot(d, d))
    return abs(c) < CRIT_TOL


@njit(cache=True)
def dcsd(V, stop_below):
    """Doubly critical self-distance.

    Returns ``(value, e1, s1, e2, s2, min_nonadjacent, stopped)``. The scan
    returns early with ``stopped=True`` as soon as a qualifying distance
    below ``stop_below`` is found; pass ``-1.0`` for a full scan.
    ``value`` is ``inf`` when no pair qualifies.
    """
    n = V.shape[0]
    mid = np.empty((n, 3))
    half = np.empty(n)
    for i in range(n):
        j = (i + 1) % n
        for k in range(3):
            mid[i, k] = 0.5 * (V[i, k] + V[j, k])
        half[i] = 0.5 * _norm(_sub(_pt(V, j), _pt(V, i)))

    best = np.inf
    be1 = -1
    be2 = -1
    bs1 = 0.0
    bs2 = 0.0
    raw = np.inf

    # vertex-to-foot pairs on adjacent edges (the only candidates for n = 3)
    for i in range(n):
        ip = (i - 1) % n
        inx = (i + 1) % n
        for side in range(2):
            if side == 0:
                src = ip
                e = i
            else:
                src = inx
                e = ip
            p = _pt(V, e)
            d = _sub(_pt(V, (e + 1) % n), p)
            xs = _pt(V, src)
            t = _dot(_sub(xs, p), d) / _dot(d, d)
            if t <= CRIT_TOL or t >= 1.0 - CRIT_TOL:
                continue
            w = _sub(_axpy(p, t, d), xs)
            dist = _norm(w)
            if dist <= 0.0 or dist >= best:
                continue
            if _vertex_critical(V, src, w):
                best = dist
                if src == inx:
                    be1, bs1 = i, 1.0
                else:
                    be1, bs1 = ip, 0.0
                be2, bs2 = e, t
                if best < stop_below:
                    return best, be1, bs1, be2, bs2, raw, True

    for i in range(n):
        p1 = _pt(V, i)
        q1 = _pt(V, (i + 1) % n)
        d1 = _sub(q1, p1)
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            dx = mid[j, 0] - mid[i, 0]
            dy = mid[j, 1] - mid[i, 1]
            dz = mid[j, 2] - mid[i, 2]
            lower = math.sqrt(dx * dx + dy * dy + dz * dz) - half[i] - half[j]
            if lower > best and lower > raw:
                continue
            p2 = _pt(V, j)
            q2 = _pt(V, (j + 1) % n)
            s, t = segment_params(p1, q1, p2, q2)
            w = _sub(_axpy(p2, t, _sub(q2, p2)), _axpy(p1, s, d1))
            dist = _norm(w)
            if dist < raw:
                raw = dist
            if dist >= best or dist <= 0.0:
                continue
            if _point_critical(V, i, s, w) and _point_critical(V, j, t, _scale(-1.0, w)):
                best = dist
                be1, bs1, be2, bs2 = i, s, j, t
                if best < stop_below:
                    return best, be1, bs1, be2, bs2, raw, True
    return best, be1, bs1, be2, bs2, raw, False


@njit(cache=True)
def thickness_value(V):
    mr, _ = min_rad(V)
    d = dcsd(V, -1.0)[0]
    return min(mr, 0.5 * d)


@njit(cache=True)
def embedding_witness(V, tol_abs, cos_pi_tol):
    """First violating edge pair ``(i, j)`` or ``(-1, -1)`` when embedded.

    Adjacent edges violate only when they double back on each other.
    """
    n = V.shape[0]
    for i in range(n):
        a = _sub(_pt(V, i), _pt(V, (i - 1) % n))
        b = _sub(_pt(V, (i + 1) % n), _pt(V, i))
        c = _dot(a, b) / math.sqrt(_dot(a, a) * _dot(b, b))
        if c <= -1.0 + cos_pi_tol:
            return (i - 1) % n, i
    for i in range(n):
        p1 = _pt(V, i)
        q1 = _pt(V, (i + 1) % n)
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if segment_distance(p1, q1, _pt(V, j), _pt(V, (j + 1) % n)) <= tol_abs:
                return i, j
    return -1, -1


@njit(cache=True)
def _point_in_triangle(p, a, b, c, tol):
    # barycentric test in the triangle's plane; p assumed (near) coplanar
    v0 = _sub(b, a)
    v1 = _sub(c, a)
    v2 = _sub(p, a)
    d00 = _dot(v0, v0)
    d01 = _dot(v0, v1)
    d11 = _dot(v1, v1)
    d20 = _dot(v2, v0)
    d21 = _dot(v2, v1)
    den = d00 * d11 - d01 * d01
    if den <= 0.0:
        return False
    v = (d11 * d20 - d01 * d21) / den
    w = (d00 * d21 - d01 * d20) / den
    return v >= -tol and w >= -tol and v + w <= 1.0 + tol


@njit(cache=True)
def segment_hits_triangle(p, q, a, b, c, tol_abs):
    """Whether segment ``pq`` meets the closed triangle ``abc`` (within ``tol_abs``)."""
    # triangle edges vs segment handles coplanar and grazing contact
    if segment_distance(p, q, a, b) <= tol_abs:
        return True
    if segment_distance(p, q, b, c) <= tol_abs:
        return True
    if segment_distance(p, q, c, a) <= tol_abs:
        return True
    ab = _sub(b, a)
    ac = _sub(c, a)
    nrm = _cross(ab, ac)
    nn = _norm(nrm)
    if nn <= 0.0:
        return False
    u = _scale(1.0 / nn, nrm)
    dp = _dot(_sub(p, a), u)
    dq = _dot(_sub(q, a), u)
    scale = math.sqrt(max(_dot(ab, ab), _dot(ac, ac)))
    rel = tol_abs / scale if scale > 0.0 else 0.0
    if abs(dp) <= tol_abs and _point_in_triangle(p, a, b, c, rel):
        return True
    if abs(dq) <= tol_abs and _point_in_triangle(q, a, b, c, rel):
        return True
    if (dp > tol_abs and dq > tol_abs) or (dp < -tol_abs and dq < -tol_abs):
        return False
    if dp == dq:
        return False
    lam = dp / (dp - dq)
    if lam < 0.0 or lam > 1.0:
        return False
    return _point_in_triangle(_axpy(p, lam, _sub(q, p)), a, b, c, rel)


@njit(cache=True)
def _ray_enters_triangle(apex, d, b, c, tol):
    """Whether the ray from vertex ``apex`` of triangle (apex, b, c) along ``d`` enters it."""
    u = _sub(b, apex)
    v = _sub(c, apex)
    nrm = _cross(u, v)
    nn = _norm(nrm)
    ld = _norm(d)
    if nn <= 0.0:
        # degenerate (zero-area) triangle: a segment from apex
        for e in (u, v):
            le = _norm(e)
            if le > 0.0:
                if _norm(_cross(e, d)) <= tol * le * ld and _dot(e, d) > 0.0:
                    return True
        return False
    if abs(_dot(d, nrm)) > tol * nn * ld:
        return False
    # coplanar: d inside the cone spanned by u and v
    cu = _dot(_cross(u, d), nrm)
    cv = _dot(_cross(d, v), nrm)
    lim = -tol * nn * ld * max(_norm(u), _norm(v))
    return cu >= lim and cv >= lim


@njit(cache=True)
def _turn_ok(a, b, cos_pi_tol):
    return _dot(a, b) / math.sqrt(_dot(a, a) * _dot(b, b)) > -1.0 + cos_pi_tol


@njit(cache=True)
def move_is_safe(V, i, newpos, tol_abs, cos_pi_tol):
    """Swept-triangle test for moving vertex ``i`` to ``newpos``.

    True when the moved polygon stays embedded near ``i`` and neither
    triangle swept by the two edges at ``i`` touches another edge, which
    makes the straight-line motion an ambient isotopy. ``V`` is not modified.
    """
    n = V.shape[0]
    ip = (i - 1) % n
    inx = (i + 1) % n
    old = _pt(V, i)
    new = (newpos[0], newpos[1], newpos[2])
    pv = _pt(V, ip)
    nv = _pt(V, inx)
    # new edges must be nondegenerate and not doubled back
    e_in = _sub(new, pv)
    e_out = _sub(nv, new)
    tol2 = tol_abs * tol_abs
    if _dot(e_in, e_in) <= tol2 or _dot(e_out, e_out) <= tol2:
        return False
    if not _turn_ok(_sub(pv, _pt(V, (i - 2) % n)), e_in, cos_pi_tol):
        return False
    if not _turn_ok(e_in, e_out, cos_pi_tol):
        return False
    if not _turn_ok(e_out, _sub(_pt(V, (i + 2) % n), nv), cos_pi_tol):
        return False
    ipp = (ip - 1) % n
    for j in range(n):
        if j == ip or j == i:
            continue
        p = _pt(V, j)
        q = _pt(V, (j + 1) % n)
        # the two new edges against the edges not adjacent to them
        if n > 3:
            if j != ipp and segment_distance(pv, new, p, q) <= tol_abs:
                return False
            if j != inx and segment_distance(new, nv, p, q) <= tol_abs:
                return False
        # swept triangles (pv, old, new) and (nv, old, new)
        for tri in range(2):
            if tri == 0:
                anchor = ip
                av = pv
            else:
                anchor = inx
                av = nv
            if j == anchor:
                if _ray_enters_triangle(av, _sub(q, p), old, new, CRIT_TOL):
                    return False
            elif (j + 1) % n == anchor:
                if _ray_enters_triangle(av, _sub(p, q), old, new, CRIT_TOL):
                    return False
            elif segment_hits_triangle(p, q, av, old, new, tol_abs):
                return False
    return True


@njit(cache=True)
def _ball2(a, b):
    c = _scale(0.5, _add(a, b))
    return c, _norm(_sub(a, c))


@njit(cache=True)
def _ball3(a, b, c):
    u = _sub(b, a)
    v = _sub(c, a)
    w = _cross(u, v)
    ww = _dot(w, w)
    if ww <= 1e-30 * _dot(u, u) * _dot(v, v):
        # collinear: diametral ball of the farthest pair
        c1, r1 = _ball2(a, b)
        c2, r2 = _ball2(a, c)
        c3, r3 = _ball2(b, c)
        if r1 >= r2 and r1 >= r3:
            return c1, r1
        if r2 >= r3:
            return c2, r2
        return c3, r3
    off = _scale(1.0 / (2.0 * ww), _cross(w, _sub(_scale(_dot(v, v), u), _scale(_dot(u, u), v))))
    return _add(a, off), _norm(off)


@njit(cache=True)
def _ball4(a, b, c, d):
    M = np.empty((3, 3))
    rhs = np.empty(3)
    k = 0
    for p in (b, c, d):
        e = _sub(p, a)
        for m in range(3):
            M[k, m] = 2.0 * e[m]
        rhs[k] = _dot(e, e)
        k += 1
    det = np.linalg.det(M)
    scale = max(rhs[0], rhs[1], rhs[2]) ** 1.5
    if abs(det) <= 1e-12 * 8.0 * scale:
        return a, 0.0, False
    off = np.linalg.solve(M, rhs)
    o = (off[0], off[1], off[2])
    return _add(a, o), _norm(o), True


@njit(cache=True, inline="always")
def _inside(p, c, r, tol):
    return _norm(_sub(p, c)) <= r + tol


@njit(cache=True)
def _small_ball(a, b, c, d, tol):
    """Brute-force smallest ball of four points (degenerate fallback)."""
    pts = (a, b, c, d)
    bestc = a
    bestr = np.inf
    for i in range(4):
        for j in range(i + 1, 4):
            cc, r = _ball2(pts[i], pts[j])
            if r < bestr:
                ok = True
                for k in range(4):
                    if not _inside(pts[k], cc, r, tol):
                        ok = False
                if ok:
                    bestc, bestr = cc, r
            for k in range(j + 1, 4):
                cc, r = _ball3(pts[i], pts[j], pts[k])
                if r < bestr:
                    ok = True
                    for m in range(4):
                        if not _inside(pts[m], cc, r, tol):
                            ok = False
                    if ok:
                        bestc, bestr = cc, r
    if bestr == np.inf:
        cc, r, _ = _ball4(a, b, c, d)
        bestc, bestr = cc, r
    return bestc, bestr


@njit(cache=True)
def min_ball(P, tol_rel):
    """Smallest enclosing ball ``(center, radius)`` of the rows of ``P``.

    Welzl's algorithm in its nested move-free form; ``P`` should already be
    in a scrambled order for expected linear time.
    """
    n = P.shape[0]
    p0 = _pt(P, 0)
    ext = 0.0
    for i in range(n):
        ext = max(ext, _norm(_sub(_pt(P, i), p0)))
    tol = tol_rel * max(ext, 1e-300)
    c = p0
    r = 0.0
    for i in range(1, n):
        pi = _pt(P, i)
        if _inside(pi, c, r, tol):
            continue
        c = pi
        r = 0.0
        for j in range(i):
            pj = _pt(P, j)
            if _inside(pj, c, r, tol):
                continue
            c, r = _ball2(pi, pj)
            for k in range(j):
                pk = _pt(P, k)
                if _inside(pk, c, r, tol):
                    continue
                c, r = _ball3(pi, pj, pk)
                for m in range(k):
                    pm = _pt(P, m)
                    if _inside(pm, c, r, tol):
                        continue
                    c4, r4, ok = _ball4(pi, pj, pk, pm)
                    if not ok:
                        c4, r4 = _small_ball(pi, pj, pk, pm, tol)
                    c, r = c4, r4
    out = np.empty(3)
    out[0] = c[0]
    out[1] = c[1]
    out[2] = c[2]
    return out, r

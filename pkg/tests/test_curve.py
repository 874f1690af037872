import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import regular, square, torus, unit_square
from ropedecomp.curve import (CurveFormatError, DegenerateEdgeError, Isometry, PiTurnError,
                              PolygonalCurve, SelfIntersectionError, arclength_barycenter,
                              curve_from_dict, curve_to_dict, is_embedded, length, load_curve,
                              save_curve, transform)


def test_square_from_json(tmp_path):
    p = tmp_path / "sq.json"
    p.write_text(json.dumps({"vertices": [[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]]}))
    c = load_curve(p)
    assert c.n == 4
    assert len(c.edges()[0]) == 4


def test_degenerate_edge_rejected():
    with pytest.raises(DegenerateEdgeError, match="degenerate edge"):
        PolygonalCurve([[0, 0, 0], [1, 0, 0], [2, 0, 0], [2, 0, 0]])


def test_pi_turn_rejected():
    with pytest.raises(PiTurnError, match="pi-turn"):
        PolygonalCurve([[0, 0, 0], [1, 0, 0], [0.5, 0, 0], [0, 1, 0]])


@pytest.mark.parametrize("bad", [
    {"vertices": [[0, 0], [1, 0], [0, 1]]},
    {"vertices": [[0, 0, 0], [1, 0, 0]]},
    {"vertices": [[0, 0, 0], [1, 0, "x"], [0, 1, 0]]},
    {"points": []},
    [1, 2, 3],
])
def test_malformed_json(bad):
    with pytest.raises(CurveFormatError):
        curve_from_dict(bad)


def test_nonfinite_rejected():
    with pytest.raises(CurveFormatError):
        PolygonalCurve([[0, 0, 0], [1, 0, 0], [0, math.nan, 0]])


def test_parse_error(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(CurveFormatError, match="parse error"):
        load_curve(p)


def test_trefoil_roundtrip(tmp_path):
    c = torus(2, 3, 64)
    p = tmp_path / "t.json"
    save_curve(c, p)
    back = load_curve(p)
    assert np.array_equal(back.vertices, c.vertices)
    assert back.name == c.name and back.knot_type == "trefoil"
    assert curve_to_dict(back) == curve_to_dict(c)


def test_self_intersecting_file(tmp_path):
    p = tmp_path / "bow.json"
    p.write_text(json.dumps({"vertices": [[0, 0, 0], [1, 1, 0], [1, 0, 0], [0, 1, 0]]}))
    with pytest.raises(SelfIntersectionError, match="self-intersection"):
        load_curve(p)


def test_vertices_read_only():
    c = square()
    with pytest.raises(ValueError):
        c.vertices[0, 0] = 5.0


def test_lengths():
    assert length(unit_square()) == 4.0
    assert length(square()) == pytest.approx(4 * math.sqrt(2), rel=1e-15)
    closed = 2 * 512 * math.sin(math.pi / 512)
    assert length(regular(512)) == pytest.approx(closed, rel=1e-13)
    assert closed == pytest.approx(6.283146, abs=1e-6)


def test_embedded_examples():
    assert is_embedded(square()) == (True, None)
    assert is_embedded(torus(2, 3, 64))[0]
    eight = PolygonalCurve([[0, 0, 0], [2, 2, 0], [2, 0, 0], [0, 2, 0]])
    ok, witness = is_embedded(eight)
    assert not ok and witness == (0, 2)


def test_embedded_matches_bruteforce():
    # all-pairs closest distance by dense sampling of each non-adjacent pair
    c = torus(2, 3, 64)
    v = c.vertices
    n = c.n
    u = np.linspace(0, 1, 41)
    closest = math.inf
    for i in range(n):
        a = v[i] + u[:, None] * (v[(i + 1) % n] - v[i])
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            b = v[j] + u[:, None] * (v[(j + 1) % n] - v[j])
            closest = min(closest, np.sqrt(((a[:, None] - b[None]) ** 2).sum(-1)).min())
    assert closest > 0.1


def test_transform_identity_and_scale():
    c = square()
    assert np.array_equal(transform(c, Isometry.identity()).vertices, c.vertices)
    assert length(transform(c, Isometry.identity(), 2.0)) == pytest.approx(8 * math.sqrt(2))
    with pytest.raises(ValueError):
        transform(c, Isometry.identity(), 0.0)


def test_isometry_must_be_orthonormal():
    with pytest.raises(ValueError):
        Isometry(np.diag([1.0, 1.0, 1.0 + 1e-9]), np.zeros(3))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), reflect=st.booleans())
def test_length_isometry_invariant(seed, reflect):
    rng = np.random.default_rng(seed)
    c = torus(2, 3, 48)
    g = Isometry.random(rng, reflect=reflect, shift=10.0)
    assert length(transform(c, g)) == pytest.approx(length(c), rel=1e-12)


def test_barycenter():
    assert np.allclose(arclength_barycenter(square()), 0.0, atol=1e-15)
    moved = transform(square(), Isometry(np.eye(3), np.array([1.0, 2.0, 3.0])))
    assert np.allclose(arclength_barycenter(moved), [1, 2, 3], atol=1e-14)
    assert np.abs(arclength_barycenter(regular(17))).max() < 1e-12


def test_reversed_and_with_vertices():
    c = torus(2, 3, 40)
    r = c.reversed()
    assert np.array_equal(r.vertices, c.vertices[::-1])
    assert length(r) == pytest.approx(length(c), rel=1e-14)
    w = c.with_vertices(2 * c.vertices)
    assert w.knot_type == c.knot_type and length(w) == pytest.approx(2 * length(c))

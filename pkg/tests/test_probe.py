import math

import numpy as np
import pytest

from corpus import oracle_corpus, regular, square, torus, triangle
from oracles import distortion_bruteforce, level_count
from ropedecomp.curve import Isometry, PolygonalCurve, length, transform
from ropedecomp.probe import (DegenerateDirectionError, DirectionGrid, distortion,
                              distortion_bounds_report, trunk_direction, trunk_sweep)
from ropedecomp.size import diameter, min_enclosing_radius


def test_square_distortion():
    est = distortion(square())
    assert est.value == pytest.approx(2.0, abs=1e-6)
    (e1, u1), (e2, u2) = est.witness
    # opposite edge midpoints
    assert abs(e1 - e2) == 2 and (u1, u2) == (pytest.approx(0.5, abs=1e-6),
                                              pytest.approx(0.5, abs=1e-6))
    assert distortion(transform(square(), Isometry.identity(), 7.5)).value == pytest.approx(
        2.0, abs=1e-6)


def test_circle_distortion():
    assert distortion(regular(512)).value == pytest.approx(math.pi / 2, abs=1e-3)


def test_distortion_bounds_examples():
    b = distortion_bounds_report(square())
    assert (b.distortion, b.len_over_2diam, b.len_over_4rmin) == (
        pytest.approx(2.0, abs=1e-6), pytest.approx(1.414214, abs=1e-6),
        pytest.approx(1.414214, abs=1e-6))
    b = distortion_bounds_report(regular(512))
    assert b.len_over_2diam == pytest.approx(math.pi / 2, abs=1e-4)
    assert b.len_over_4rmin == pytest.approx(math.pi / 2, abs=1e-4)
    t = distortion_bounds_report(triangle())
    assert t.len_over_2diam == pytest.approx(1.5)
    assert t.distortion >= 1.5


@pytest.mark.parametrize("curve", oracle_corpus(), ids=lambda c: c.name)
def test_distortion_vs_bruteforce(curve):
    est = distortion(curve).value
    ref = distortion_bruteforce(curve.vertices, m=48)
    # both are lower bounds; the refined estimate should not lose to dense sampling
    assert est >= ref * (1 - 1e-9)
    assert est <= ref * 1.02


def test_distortion_is_realized_by_witness():
    c = torus(2, 3, 64)
    est = distortion(c)
    (e1, u1), (e2, u2) = est.witness
    v = c.vertices
    n = c.n
    x = v[e1] + u1 * (v[(e1 + 1) % n] - v[e1])
    y = v[e2] + u2 * (v[(e2 + 1) % n] - v[e2])
    cum = np.concatenate([[0.0], np.cumsum(c.edge_lengths)])
    arc = abs((cum[e1] + u1 * c.edge_lengths[e1]) - (cum[e2] + u2 * c.edge_lengths[e2]))
    arc = min(arc, length(c) - arc)
    assert arc / np.linalg.norm(x - y) == pytest.approx(est.value, rel=1e-12)


def test_distortion_monotone_in_samples():
    # the sampled candidates for m are a subset of those for 2m
    for c in (torus(2, 3, 64), torus(2, 5, 80)):
        vals = [distortion(c, m, refine_iters=0, top=1).value for m in (2, 4, 8, 16)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_distortion_bounds_on_corpus(corpus):
    for c in corpus:
        if c.n > 256:
            continue
        est = distortion(c, 8).value
        l = length(c)
        assert est >= l / (2 * diameter(c)) - 1e-9, c.name
        assert est >= l / (4 * min_enclosing_radius(c)[0]) - 1e-9, c.name


def test_distortion_rejects_few_samples():
    with pytest.raises(ValueError):
        distortion(square(), 1)


def test_trunk_square():
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert trunk_direction(square(), rng.normal(size=3)) == 2
    p = trunk_sweep(square(), DirectionGrid.fibonacci(512))
    assert p.min_v == p.max_v == 2


def test_trunk_degenerate_direction():
    with pytest.raises(DegenerateDirectionError, match="degenerate direction"):
        trunk_direction(square(), [0, 0, 1])


def test_trunk_vs_level_oracle():
    c = torus(2, 3, 64)
    v = np.array([1e-3, 2e-3, 1.0])
    v /= np.linalg.norm(v)
    t = trunk_direction(c, v)
    assert t >= 2 and t % 2 == 0
    assert t == level_count(c.vertices, v)
    h = c.vertices @ v
    levels = np.linspace(h.min(), h.max(), 1000)[1:-1]
    assert level_count(c.vertices, v, levels) <= t
    rng = np.random.default_rng(4)
    for _ in range(20):
        w = rng.normal(size=3)
        assert trunk_direction(c, w) == level_count(c.vertices, w / np.linalg.norm(w))


def test_trunk_profile_parity_and_bounds(corpus):
    grid = DirectionGrid.fibonacci(64)
    for c in corpus:
        p = trunk_sweep(c, grid)
        assert np.all(p.multiplicities % 2 == 0) and p.multiplicities.min() >= 2
        assert p.min_v <= p.max_v


def test_trefoil_grid_doubling():
    c = torus(2, 3, 64)
    a = trunk_sweep(c, DirectionGrid.fibonacci(2048))
    b = trunk_sweep(c, DirectionGrid.fibonacci(4096))
    assert a.max_v == b.max_v
    assert a.min_v >= 4  # a trefoil has bridge number 2


def test_trunk_scale_invariant():
    c = torus(2, 3, 64)
    g = DirectionGrid.fibonacci(128)
    a = trunk_sweep(c, g, refine_levels=0)
    b = trunk_sweep(transform(c, Isometry.identity(), 3.0), g, refine_levels=0)
    assert np.array_equal(a.multiplicities, b.multiplicities)


def test_trunk_rotation_equivariant():
    c = torus(2, 5, 80)
    rng = np.random.default_rng(21)
    iso = Isometry.random(rng)
    grid = DirectionGrid.fibonacci(256)
    a = trunk_sweep(c, grid, refine_levels=0)
    b = trunk_sweep(transform(c, iso), grid.rotated(iso.rotation), refine_levels=0)
    assert sorted(a.multiplicities) == sorted(b.multiplicities)


def test_sweep_deterministic():
    c = torus(2, 3, 64)
    a = trunk_sweep(c, DirectionGrid.fibonacci(256))
    b = trunk_sweep(c, DirectionGrid.fibonacci(256))
    assert np.array_equal(a.directions, b.directions)
    assert np.array_equal(a.multiplicities, b.multiplicities)


def test_degenerate_directions_are_perturbed():
    # axis-aligned square: many grid-free directions give tied heights
    sq = PolygonalCurve([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]])
    grid = DirectionGrid(np.array([[0, 0, 1.0]] * 32), "axis", 0.1)
    p = trunk_sweep(sq, grid, refine_levels=0)
    assert np.all(p.multiplicities == 2)
    assert np.all(np.abs(p.directions - [0, 0, 1]).max(axis=1) < 1e-6)


def test_grid_validation():
    with pytest.raises(ValueError):
        DirectionGrid.fibonacci(16)
    with pytest.raises(ValueError):
        DirectionGrid(np.ones((40, 3)), "bad", 0.1)
    g = DirectionGrid.fibonacci(100)
    assert np.allclose(np.linalg.norm(g.directions, axis=1), 1.0, atol=1e-12)

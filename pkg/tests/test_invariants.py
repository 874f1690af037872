import math

import numpy as np
import pytest

from corpus import regular, square, torus, triangle
from ropedecomp.curve import Isometry, length, transform
from ropedecomp.invariants import (CSV_HEADER, EnsembleCheck, InequalityViolation,
                                   InvariantReport, artificial_size, comparison_check,
                                   ensemble_inequality_check, report)
from ropedecomp.size import ALL_KINDS_EXAMPLE, SizeFunctionalSpec

RMIN = SizeFunctionalSpec.parse("rmin")
DIAM = SizeFunctionalSpec.parse("diam")
STAR = SizeFunctionalSpec.parse("star")


def test_square_rmin_report():
    r = report(square(), RMIN)
    assert r.len == pytest.approx(4 * math.sqrt(2))
    assert r.d_value == pytest.approx(1.0)
    assert r.thickness == pytest.approx(math.sqrt(2) / 2)
    assert r.rho == pytest.approx(5.656854, abs=1e-6)
    assert r.crad == pytest.approx(1.414214, abs=1e-6)
    assert r.rop == pytest.approx(8.0, rel=1e-14)
    assert r.factorization_residual < 1e-12
    assert r.pack == pytest.approx(1 / r.crad, rel=1e-15)


def test_circle_values():
    r = report(regular(512), RMIN)
    assert (r.rho, r.crad, r.rop) == (pytest.approx(2 * math.pi, abs=1e-3),
                                       pytest.approx(1.0, abs=1e-3),
                                       pytest.approx(2 * math.pi, abs=1e-3))
    r = report(regular(512), DIAM)
    assert (r.rho, r.crad) == (pytest.approx(math.pi, abs=1e-3), pytest.approx(2.0, abs=1e-3))


def test_from_triple_rejects_nonpositive():
    with pytest.raises(ValueError):
        InvariantReport.from_triple(DIAM, 1.0, 0.0, 1.0)


def test_csv_row_matches_header():
    r = report(torus(2, 3, 64), DIAM)
    assert len(r.csv_row()) == len(CSV_HEADER)


def test_artificial_examples():
    assert artificial_size(square()) == pytest.approx(0.707344, abs=1e-6)
    for c in (square(), triangle(), torus(2, 3, 64), regular(100)):
        r = report(c, STAR)
        assert r.crad == pytest.approx(1 + math.exp(-r.rop), rel=1e-12)
        assert 1.0 < r.crad < 2.0 or r.crad == 1.0  # e^{-rop} may drop below double precision
        assert abs(r.rho * r.crad - r.rop) / r.rop <= 1e-12


def test_artificial_rho_orders_like_rop():
    a = report(regular(8), STAR)
    b = report(torus(2, 3, 64), STAR)
    assert (a.rop < b.rop) == (a.rho < b.rho)


def test_comparison_examples():
    c = comparison_check(square())
    assert (c.len_over_diam, c.len_over_rmin, c.two_len_over_diam) == (
        pytest.approx(2.828427, abs=1e-6), pytest.approx(5.656854, abs=1e-6),
        pytest.approx(5.656854, abs=1e-6))
    t = comparison_check(triangle())
    assert t.len_over_rmin == pytest.approx(5.196152, abs=1e-6)
    assert t.two_len_over_diam == pytest.approx(6.0)
    assert t.len_over_rmin < t.two_len_over_diam


def test_comparison_on_corpus(corpus):
    for c in corpus:
        comparison_check(c)


def test_ensemble_single_and_invariant():
    r = report(torus(2, 3, 64), DIAM)
    e = ensemble_inequality_check([r])
    assert e.slack == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(3)
    base = regular(512)
    ens = [report(transform(base, Isometry.random(rng), float(rng.uniform(0.5, 2))), DIAM)
           for _ in range(5)]
    assert abs(ensemble_inequality_check(ens).slack) <= 1e-9


def test_ensemble_rejects_mixed_and_empty():
    with pytest.raises(ValueError):
        ensemble_inequality_check([])
    with pytest.raises(ValueError):
        ensemble_inequality_check([report(square(), DIAM), report(square(), RMIN)])


def test_ensemble_slack_nonnegative_on_corpus(corpus):
    for spec in ALL_KINDS_EXAMPLE:
        reps = [report(c, spec) for c in corpus if c.n <= 256]
        e = ensemble_inequality_check(reps)
        assert isinstance(e, EnsembleCheck) and e.slack >= -1e-9


def test_ensemble_violation_raises():
    # a hand-made report whose rop is not rho * crad
    bad = InvariantReport(DIAM, 1, 1, 1, rho=2.0, crad=2.0, pack=0.5, rop=3.0,
                          factorization_residual=0.25)
    with pytest.raises(InequalityViolation):
        ensemble_inequality_check([report(square(), DIAM), bad])


def test_rho_diam_at_least_two(corpus):
    for c in corpus:
        assert report(c, DIAM).rho >= 2 - 1e-12


def test_ratios_scale_invariant():
    c = torus(2, 5, 80)
    rng = np.random.default_rng(8)
    moved = transform(c, Isometry.random(rng, shift=4.0), 3.7)
    for spec in ALL_KINDS_EXAMPLE:
        a, b = report(c, spec), report(moved, spec)
        for name in ("rho", "crad", "pack", "rop"):
            assert getattr(b, name) == pytest.approx(getattr(a, name), rel=1e-9), (spec, name)
    assert length(moved) == pytest.approx(3.7 * length(c))

import math
import warnings

import numpy as np
import pytest

from corpus import regular
from ropedecomp.approx import (ConvergenceRow, ConvergenceTable, ParamCurveSpec, TooCoarseError,
                               convergence_study, inscribed_polygon)
from ropedecomp.curve import is_embedded
from ropedecomp.size import SizeFunctionalSpec

DIAM = SizeFunctionalSpec.parse("diam")
RMIN = SizeFunctionalSpec.parse("rmin")
CIRCLE_N = [16, 32, 64, 128, 256, 512, 1024]


def circle_rop(n):
    return 2 * n * math.sin(math.pi / n) / math.cos(math.pi / n)


def test_spec_parse_roundtrip():
    for text in ("circle", "circle:2.5", "torus", "torus:2,5,3,1", "torus:3,4,2.5,0.5"):
        s = ParamCurveSpec.parse(text)
        assert ParamCurveSpec.parse(str(s)) == s
    assert ParamCurveSpec.parse("torus") == ParamCurveSpec.torus(2, 3, 2.0, 1.0)
    assert ParamCurveSpec.torus().knot_type == "trefoil"
    assert ParamCurveSpec.torus(1, 4, 2, 1).knot_type == "unknot"


@pytest.mark.parametrize("bad", ["square", "torus:2,4,2,1", "torus:2,3,1,2", "torus:2,3",
                                 "circle:0", "torus:0,3,2,1"])
def test_spec_rejects(bad):
    with pytest.raises(ValueError):
        ParamCurveSpec.parse(bad)


def test_circle_polygon_is_regular():
    assert np.array_equal(inscribed_polygon(ParamCurveSpec.circle(), 512).vertices,
                          regular(512).vertices)


def test_trefoil_64_embedded():
    c = inscribed_polygon(ParamCurveSpec.torus(), 64)
    assert c.n == 64 and c.knot_type == "trefoil"
    assert is_embedded(c)[0]


def test_too_coarse_error_path():
    # six samples of the trefoil put two vertices on top of each other
    with pytest.raises(TooCoarseError, match="too coarse"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            inscribed_polygon(ParamCurveSpec.torus(), 6)
    with pytest.raises(TooCoarseError):
        inscribed_polygon(ParamCurveSpec.circle(), 2)


def test_coarse_sampling_warns():
    with pytest.warns(UserWarning, match="below the suggested"):
        c = inscribed_polygon(ParamCurveSpec.torus(), 12)
    # n=12 still embeds; the check decides, not the suggested density
    assert is_embedded(c)[0]


@pytest.mark.parametrize("n", [3, 4, 5, 7, 16, 100, 256])
def test_circle_rop_closed_form(n):
    row = convergence_study(ParamCurveSpec.circle(), RMIN, [n]).rows[0]
    assert row.rop == pytest.approx(circle_rop(n), rel=1e-12)
    assert row.thickness == pytest.approx(math.cos(math.pi / n), abs=1e-12)
    assert row.d_value == pytest.approx(1.0, abs=1e-15)


def test_circle_rop_large_n():
    # rounded float64 vertices move MinRad by a few ulps times (n / 2 pi)^2
    t = convergence_study(ParamCurveSpec.circle(), RMIN, [512, 1024])
    for row in t.rows:
        assert row.rop == pytest.approx(circle_rop(row.n), rel=1e-11)
        assert row.d_value == pytest.approx(1.0, abs=1e-15)
    assert t.rows[-1].rop == pytest.approx(2 * math.pi, abs=1e-3)
    assert t.rows[-1].crad == pytest.approx(1.0, abs=1e-4)
    assert t.rows[-1].rho == pytest.approx(2 * math.pi, abs=1e-4)


def test_circle_rop_decreasing():
    t = convergence_study(ParamCurveSpec.circle(), RMIN, CIRCLE_N)
    rops = [r.rop for r in t.rows]
    assert all(b < a for a, b in zip(rops, rops[1:]))
    assert all(r > 2 * math.pi for r in rops)


def test_circle_diam_study():
    t = convergence_study(ParamCurveSpec.circle(), DIAM, CIRCLE_N)
    assert abs(t.rows[-1].crad - 2) < 1e-2
    inc = t.crad_increments
    assert len(inc) == len(CIRCLE_N) - 1
    assert np.all(np.diff(inc[-4:]) < 0)
    for r in t.rows:
        assert r.residual <= 1e-12


def test_trefoil_cauchy_increments():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t = convergence_study(ParamCurveSpec.torus(), RMIN, [32, 64, 128, 256, 512])
    inc = t.crad_increments
    assert np.all(np.diff(inc[-3:]) < 0)
    assert all(r.residual <= 1e-12 for r in t.rows)


def test_study_sorts_and_parallel_matches():
    a = convergence_study(ParamCurveSpec.torus(2, 5, 2, 1), DIAM, [128, 64, 96])
    assert [r.n for r in a.rows] == [64, 96, 128]
    b = convergence_study(ParamCurveSpec.torus(2, 5, 2, 1), DIAM, [64, 96, 128], workers=2)
    assert a.rows == b.rows


def test_table_requires_increasing_n():
    row = ConvergenceRow(8, 1, 1, 1, 1, 1, 1, 0)
    with pytest.raises(ValueError):
        ConvergenceTable(ParamCurveSpec.circle(), DIAM, (row, row))


def test_study_propagates_too_coarse():
    with pytest.raises(TooCoarseError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            convergence_study(ParamCurveSpec.torus(), DIAM, [6, 64])


@pytest.mark.parametrize("text", ["rp:2", "dp:1", "conv:0.01"])
def test_other_functionals_report_trends_only(text):
    # no convergence claim for these; only the per-row identities are checked
    t = convergence_study(ParamCurveSpec.torus(2, 3, 2, 1), SizeFunctionalSpec.parse(text),
                          [64, 128, 256])
    assert len(t.crad_increments) == 2 and np.all(np.isfinite(t.crad_increments))
    for r in t.rows:
        assert r.residual <= 1e-12 and r.pack * r.crad == pytest.approx(1.0, rel=1e-12)

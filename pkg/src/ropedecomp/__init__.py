"""Ropelength decomposition of polygonal knots: Rop = rho_D * CRad_D."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0+unknown"

from .approx import ConvergenceTable, ParamCurveSpec, convergence_study, inscribed_polygon
from .curve import (CurveError, Isometry, PolygonalCurve, is_embedded, length, load_curve,
                    save_curve, transform)
from .invariants import (InequalityViolation, InvariantReport, artificial_size,
                         comparison_check, ensemble_inequality_check, report)
from .optimize import (AnnealConfig, AnnealResult, Objective, anneal, estimate_knot_level,
                       isotopy_safe_move)
from .probe import DirectionGrid, TrunkProfile, distortion, trunk_direction, trunk_sweep
from .size import Kind, QuadratureConfig, SizeFunctionalSpec, evaluate
from .thickness import ThicknessBreakdown, polygonal_thickness, thickness

__all__ = [
    "AnnealConfig", "AnnealResult", "ConvergenceTable", "CurveError", "DirectionGrid",
    "InequalityViolation", "InvariantReport", "Isometry", "Kind", "Objective",
    "ParamCurveSpec", "PolygonalCurve", "QuadratureConfig", "SizeFunctionalSpec",
    "ThicknessBreakdown", "TrunkProfile", "anneal", "artificial_size", "comparison_check",
    "convergence_study", "distortion", "ensemble_inequality_check", "estimate_knot_level",
    "evaluate", "inscribed_polygon", "is_embedded", "isotopy_safe_move", "length", "load_curve",
    "polygonal_thickness", "report", "save_curve", "thickness", "transform",
    "trunk_direction", "trunk_sweep", "__version__",
]

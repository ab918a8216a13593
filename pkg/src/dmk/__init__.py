"""Discrete L_p dual Minkowski problem: polytopes, dual curvature measures, solver."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateDensity,
    DmkError,
    FacetCollapse,
    GeometryError,
    MeasureOnHemisphere,
    NotConverged,
    PEqualsQ,
)
from .measures import (  # noqa: E402
    DualMeasureResult,
    dual_curvature_measure,
    dual_intrinsic_volume,
    sl_equivariance_residual,
    vq_gradient,
)
from .oracle import McEstimate, mc_dual_curvature, mc_dual_intrinsic_volume  # noqa: E402
from .polytope import (  # noqa: E402
    DirectionWeightMeasure,
    HPolytope,
    VPolytope,
    build_hpolytope,
    h_to_v,
    origin_diagnostics,
    radial_function,
    support,
    validate_measure,
)
from .solver import (  # noqa: E402
    SolveOptions,
    SolveReport,
    discretize_density,
    rescale_solution,
    solve,
    solve_density,
    solve_normalized,
)
from .star import Ball, Ellipsoid, PolytopeGauge, RadialTable, StarBody  # noqa: E402

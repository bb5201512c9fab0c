"""Log-concave functions, Asplund sums and valuations-style functionals on a desk.

The package works with ``f = exp(-phi)`` for convex ``phi``, discretized as
piecewise-linear grid functions in one or two dimensions, or given by an
analytic family from :mod:`asplund.specs`.  Support functions ``h_f = phi*``
turn the Asplund sum into addition; on top of that sit recession functions,
moment and surface measures, first variations, and a harness that audits
black-box functionals against the ``(mu, nu)`` representation.
"""

from . import specs
from .conjugate import auto_dual_grid, biconjugate, conjugate_points, legendre_transform
from .errors import (
    AsplundError,
    DivergenceError,
    ImproperFunctionError,
    IndeterminateError,
    NumericalError,
    TruncationError,
    ValidationError,
)
from .grid import ConvexGridFunction, GridSpec
from .logconcave import (
    CoercivityClass,
    LogConcaveFn,
    asplund_sum,
    classify_coercivity,
    dilate,
    integral,
    support_function,
)
from .measures import (
    MinkowskiReport,
    PointMeasure,
    SphereMeasure,
    integrate_against,
    minkowski_check,
    moment_measure,
    surface_measure,
)
from .recession import (
    DirectionGrid,
    RecessionFunction,
    divergence_witness,
    dominating_growth,
    pasch_hausdorff,
    recession_function,
    recession_values,
    rho_a,
    support_body_function,
)
from .riesz_lab import (
    FunctionalOracle,
    RepresentedFunctional,
    axiom_audit,
    decompose_functional,
    degenerate_identity_witness,
    monotone_continuity_check,
)
from .variation import (
    VariationReport,
    essential_continuity_probe,
    first_variation,
    variation_report,
    verify_representation,
)

__version__ = "0.1.0"

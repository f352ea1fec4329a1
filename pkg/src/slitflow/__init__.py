"""Slit-torus surfaces under the diagonal geodesic flow.

Coupled continued-fraction slope families, exact curve bookkeeping on the
glued translation surface, certified length/width/twist surrogates along the
flow, and limit-set ratio reports.
"""

from .contfrac import (
    BudgetExceededError,
    CFExpansion,
    InsufficientDepthError,
    InvalidCoefficientError,
    SlopeFamily,
    approximation_gap,
    default_dense_sequence,
    extend_convergents,
    generate_slope_family,
    read_family,
    theta_enclosure,
    verify_lemma_slopes,
    write_family,
)
from .geodesic import (
    ActiveInterval,
    LengthReport,
    PantsEstimate,
    active_interval,
    balanced_time,
    build_length_report,
    collar_width,
    extremal_estimate,
    hyperbolic_surrogate,
    pants_length_estimate,
    shortest_torus_curve,
    twist_data,
)
from .limitset import (
    LimitProbe,
    beta_decay_report,
    build_probe,
    ratio_report,
    sample_time,
    simplex_sweep,
    trend_reached,
)
from .numeric import Enclosure, set_precision, working_dps
from .surface import (
    BoundaryCurve,
    BridgeCurve,
    Curve,
    FoliationWeight,
    SlitSurface,
    TorusCurve,
    UnsupportedCurveError,
    parse_curve,
)

__version__ = "0.1.0"

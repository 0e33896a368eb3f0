"""Relative invariants of planar point configurations under projective maps."""

from .cocycle import (
    Cochain,
    d0,
    d1,
    dn,
    gauge,
    gauge_from_multiplier,
    is_multiplier,
    jacobian_cochain,
    multiplier_from_gauge,
)
from .errors import (
    DegenerateConfiguration,
    DivisionByZero,
    EvaluationError,
    FractionalPowerOfNegative,
    FrameSolveFailure,
    HorizonCrossesSupport,
    InsufficientAcceptance,
    ParseError,
    PointAtInfinity,
    RelinvError,
    SingularHomography,
    SingularSystem,
    UnsupportedArity,
    UnsupportedFormat,
)
from .image_integral import (
    Estimate,
    ImageGrid,
    IntegralSpec,
    integral_invariant,
    invariance_experiment,
    load_pgm,
    sample_intensity,
    warp_image,
)
from .invariants import (
    InvariantVector,
    fundamental_invariants,
    invariant_vector,
    invariantized_jacobian_closed,
    invariantized_jacobian_direct,
    relative_invariant,
)
from .moving_frame import (
    ExtendedFrame,
    ExtendedPoint,
    extended_action,
    extended_frame,
    frame,
    invariantize_config,
    invariantize_function,
    solve_frame,
)
from .projective_core import (
    Homography,
    Point2,
    PointConfig,
    apply_config,
    apply_homography,
    delta,
    general_position,
    jacobian_point,
    mixed_sum,
    total_jacobian,
)
from .reports import PropertyReport

__version__ = "0.1.0"

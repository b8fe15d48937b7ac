"""Critical-state magnetization fields on 2D cross sections.

Anisotropic Bean model: the field gradient is confined to a convex body K,
distances are measured by the polar gauge of K, and the quasistatic
evolution clamps the field into a moving band between two such distances.
"""

__version__ = "0.1.0"

from .boundary import DomainBoundary
from .convex import ConvexBody, GaugePair
from .distance import (
    DistanceData,
    DistanceSolver,
    RayFan,
    Workspace,
    build_ray_fan,
    change_of_variables_integrate,
    minkowski_distance,
    minkowski_distance_minus,
    projections,
)
from .evolution import (
    DriveProfile,
    LinearPiece,
    LoopData,
    SampledPiece,
    admissible_projection,
    closed_form_field,
    discrete_evolution,
    dissipation_rate,
    electric_field,
    faraday_residual,
    full_penetration_time,
    hysteresis_loop,
    magnetization,
    penetration_front,
    rate_field,
)
from .grid import ScalarGrid
from .power_law import PowerResult, evaluate_jp, gamma_report, gradient_jp, minimize_jp
from .step import (
    StepOutput,
    TestBank,
    clipping_lengths,
    dual_function,
    explicit_minimizer,
    minimality_check,
    mk_residual,
    partition_labels,
    solve_step,
)

__all__ = [
    "__version__",
    "ConvexBody",
    "GaugePair",
    "DomainBoundary",
    "ScalarGrid",
    "DistanceData",
    "DistanceSolver",
    "RayFan",
    "Workspace",
    "build_ray_fan",
    "change_of_variables_integrate",
    "minkowski_distance",
    "minkowski_distance_minus",
    "projections",
    "StepOutput",
    "TestBank",
    "clipping_lengths",
    "dual_function",
    "explicit_minimizer",
    "minimality_check",
    "mk_residual",
    "partition_labels",
    "solve_step",
    "DriveProfile",
    "LinearPiece",
    "SampledPiece",
    "LoopData",
    "admissible_projection",
    "closed_form_field",
    "discrete_evolution",
    "dissipation_rate",
    "electric_field",
    "faraday_residual",
    "full_penetration_time",
    "hysteresis_loop",
    "magnetization",
    "penetration_front",
    "rate_field",
    "PowerResult",
    "evaluate_jp",
    "gamma_report",
    "gradient_jp",
    "minimize_jp",
]

"""Error-bounded sample placement and measurement tours over Gaussian random fields."""

from .field_model import (
    EXPERIMENT_PARAMS,
    FieldParams,
    InfeasibleToleranceError,
    PlanningQuery,
    SingularSystemError,
    compute_r_max,
    compute_r_min,
    covariance,
    estimation_error,
    noise_floor,
)
from .geometry import Environment, Point2
from .planners import (
    MeasurementSet,
    PlanReport,
    boundary_repair,
    disk_cover,
    disk_cover_tour,
    hex_cover,
    hex_cover_tour,
)
from .tsp import Tour, christofides, held_karp_exact, two_opt
from .verification import check_feasibility, compute_bounds, counterexample_check, monte_carlo_mse

__version__ = "0.1.0"

__all__ = [
    "EXPERIMENT_PARAMS",
    "Environment",
    "FieldParams",
    "InfeasibleToleranceError",
    "MeasurementSet",
    "PlanReport",
    "PlanningQuery",
    "Point2",
    "SingularSystemError",
    "Tour",
    "boundary_repair",
    "check_feasibility",
    "christofides",
    "compute_bounds",
    "compute_r_max",
    "compute_r_min",
    "counterexample_check",
    "covariance",
    "disk_cover",
    "disk_cover_tour",
    "estimation_error",
    "held_karp_exact",
    "hex_cover",
    "hex_cover_tour",
    "monte_carlo_mse",
    "noise_floor",
    "two_opt",
]

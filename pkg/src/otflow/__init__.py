"""Wasserstein gradient flows of higher-order energies on the circle."""

__version__ = "0.1.0"

from .energy import EnergySpec, SublevelBounds, evaluate, first_variation, pde_rhs, sublevel_bounds
from .exceptions import (
    DegenerateDensityError,
    DomainError,
    FoldError,
    MarginalError,
    OptimizationFailure,
    OTFlowError,
    ResolutionError,
    StepSizeError,
)
from .geometry import Grid, PeriodicDensity, PeriodicField, derivative, integrate, rotate
from .transport import TransportMap, geodesic, optimal_map, pushforward, w2_distance

__all__ = [
    "__version__",
    "EnergySpec",
    "SublevelBounds",
    "evaluate",
    "first_variation",
    "pde_rhs",
    "sublevel_bounds",
    "DegenerateDensityError",
    "DomainError",
    "FoldError",
    "MarginalError",
    "OptimizationFailure",
    "OTFlowError",
    "ResolutionError",
    "StepSizeError",
    "Grid",
    "PeriodicDensity",
    "PeriodicField",
    "derivative",
    "integrate",
    "rotate",
    "TransportMap",
    "geodesic",
    "optimal_map",
    "pushforward",
    "w2_distance",
]

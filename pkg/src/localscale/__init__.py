"""Attractors, distortion calculus and dimension/measure brackets for finite iterated function systems."""
from ._accel import BACKEND
from .errors import (
    BracketDegenerateError,
    CapError,
    DomainError,
    EmptySetError,
    LocalScaleError,
    MapInvariantError,
    PreconditionError,
    RepresentationMismatch,
    ResolutionError,
    SingularityError,
)
from .geometry import (
    Ball,
    GridSet,
    PointCloud,
    diameter,
    epsilon_neighborhood,
    hausdorff_distance,
    hausdorff_slack,
    union_subadditivity_check,
)
from .ifs import AffineMap, PerturbedMap, System, attractor, compose, d0_distance

__version__ = "0.1.0"

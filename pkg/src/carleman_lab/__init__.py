"""Numerical lab for Carleman weights and observability of transport equations.

The equation studied is ``u_t + H(t) . grad u = 0`` on a bounded convex
domain, with a velocity that depends on time only.
"""

from .errors import CarlemanLabError
from .geometry import BoundaryGrid, Domain, QuadratureGrid
from .kernels import BACKEND
from .partition import (
    ConeCertificate, ConePartition, greedy_partition, uniform_count, uniform_partition,
    verify_cone_condition,
)
from .transport import (
    CharacteristicSolver, SolutionField, boundary_trace, manufactured_solution,
    rotating_bump_counterexample, solve_characteristics,
)
from .velocity import CompositeField, ConstantField, RotationField, TabulatedField
from .verify import (
    carleman_report, energy_profile, extend_window_check, fit_constants, observability_ratio,
)
from .weight import CarlemanWeight, build_weight, observability_condition, p_phi, phi

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundaryGrid", "CarlemanLabError", "CarlemanWeight", "CharacteristicSolver",
    "CompositeField", "ConeCertificate", "ConePartition", "ConstantField", "Domain",
    "QuadratureGrid", "RotationField", "SolutionField", "TabulatedField", "boundary_trace",
    "build_weight", "carleman_report", "energy_profile", "extend_window_check",
    "fit_constants", "greedy_partition", "manufactured_solution", "observability_condition",
    "observability_ratio", "p_phi", "phi", "rotating_bump_counterexample",
    "solve_characteristics", "uniform_count", "uniform_partition", "verify_cone_condition",
]

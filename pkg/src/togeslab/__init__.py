"""Simulation and verification of third-order inertial gradient dynamics."""

from .dynamics import DynamicsConfig, Kind, PhaseState
from .integrator import IntegratorConfig, Trajectory, integrate, sample_at
from .problems import ObjectiveSpec, builtin_problem

__version__ = "0.1.0"

__all__ = [
    "DynamicsConfig",
    "IntegratorConfig",
    "Kind",
    "ObjectiveSpec",
    "PhaseState",
    "Trajectory",
    "builtin_problem",
    "integrate",
    "sample_at",
]

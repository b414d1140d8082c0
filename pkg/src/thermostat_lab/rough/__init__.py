"""Canonical rough-path lifts of piecewise-linear drivers and the driven ODE."""

from .driven import DrivenSolution, SphereCoefficient, solve_driven_ode
from .lift import HolderReport, RoughPathGrid, canonical_lift, chen_defect, holder_norms
from .spiral import spiral_example, spiral_response, spiral_targets

__all__ = [
    "DrivenSolution",
    "HolderReport",
    "RoughPathGrid",
    "SphereCoefficient",
    "canonical_lift",
    "chen_defect",
    "holder_norms",
    "solve_driven_ode",
    "spiral_example",
    "spiral_response",
    "spiral_targets",
]

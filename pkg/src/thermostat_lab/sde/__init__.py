"""Integrators for the limiting diffusions."""

from .solvers import (
    PathSample,
    SdeConfig,
    brownian_increments,
    ito_speed_solve,
    ou_exact_step,
    ou_paths,
    ou_projection_experiment,
    strat_sphere_solve,
)

__all__ = [
    "PathSample",
    "SdeConfig",
    "brownian_increments",
    "ito_speed_solve",
    "ou_exact_step",
    "ou_paths",
    "ou_projection_experiment",
    "strat_sphere_solve",
]

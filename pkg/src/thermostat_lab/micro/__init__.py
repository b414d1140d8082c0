"""Event-driven simulation of the thermostatted particle system."""

from .params import ModelParams, default_initial_state
from .schedule import CollisionEvent, Schedule, sample_collision_schedule
from .trajectory import (
    DriverPath,
    FrameProcess,
    ParticleSystemState,
    Trajectory,
    apply_collision,
    rescale_driver,
    simulate_ensemble,
    simulate_trajectory,
    step_between_collisions,
    thermostat_rhs,
)

__all__ = [
    "CollisionEvent",
    "DriverPath",
    "FrameProcess",
    "ModelParams",
    "ParticleSystemState",
    "Schedule",
    "Trajectory",
    "apply_collision",
    "default_initial_state",
    "rescale_driver",
    "sample_collision_schedule",
    "simulate_ensemble",
    "simulate_trajectory",
    "step_between_collisions",
    "thermostat_rhs",
]

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidDimensionError, InvalidInitialConditionError, InvalidParameterError


def default_initial_state(n_particles: int, dim: int, total_energy: float) -> np.ndarray:
    """Deterministic start: equal speeds, particle k along axis ``k mod dim``."""
    p = np.zeros((n_particles, dim))
    speed = np.sqrt(total_energy / n_particles)
    for k in range(n_particles):
        p[k, k % dim] = speed
    return p.ravel()


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the microscopic model.

    ``grid_points`` is the number of uniformly spaced output samples on
    ``[0, t_final]``; collisions are resolved exactly between them.
    ``output_times``, when given, replaces that grid; it must start at 0,
    increase strictly and end at ``t_final``.
    """

    n_particles: int
    dim: int
    collision_rate: float
    field_strength: float
    total_energy: float
    t_final: float
    ode_step: float = 0.1
    grid_points: int = 101
    field_direction: tuple = None
    initial_state: tuple = field(default=None, compare=False)
    output_times: tuple = None

    def __post_init__(self):
        if self.n_particles < 1:
            raise InvalidParameterError("n_particles must be >= 1")
        if self.dim < 2:
            raise InvalidDimensionError("collisions are only defined for dim >= 2")
        for name in ("collision_rate", "total_energy", "ode_step"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if not self.field_strength >= 0:
            raise InvalidParameterError("field_strength must be nonnegative")
        if not self.t_final >= 0:
            raise InvalidParameterError("t_final must be nonnegative")
        if self.grid_points < 2:
            raise InvalidParameterError("grid_points must be >= 2")
        nhat = self.field_direction
        if nhat is None:
            nhat = tuple(np.eye(self.dim)[0])
        nhat = tuple(float(x) for x in nhat)
        if len(nhat) != self.dim or abs(np.linalg.norm(nhat) - 1.0) > 1e-14:
            raise InvalidParameterError("field_direction must be a unit vector of length dim")
        object.__setattr__(self, "field_direction", nhat)
        if self.output_times is not None:
            ts = np.asarray(self.output_times, dtype=float)
            if ts.ndim != 1 or ts.size < 2 or ts[0] != 0.0 or ts[-1] != self.t_final or np.any(np.diff(ts) <= 0):
                raise InvalidParameterError("output_times must increase strictly from 0 to t_final")
            object.__setattr__(self, "output_times", tuple(float(x) for x in ts))
            object.__setattr__(self, "grid_points", ts.size)
        if self.initial_state is not None:
            p0 = np.asarray(self.initial_state, dtype=float)
            if p0.shape != (self.n_particles * self.dim,):
                raise InvalidInitialConditionError("initial_state must have length N*d")
            if abs(p0 @ p0 - self.total_energy) > 1e-10 * self.total_energy:
                raise InvalidInitialConditionError("initial_state is off the energy sphere")
            object.__setattr__(self, "initial_state", tuple(p0))

    @property
    def size(self) -> int:
        return self.n_particles * self.dim

    @property
    def nhat(self) -> np.ndarray:
        return np.array(self.field_direction)

    def p0(self) -> np.ndarray:
        if self.initial_state is None:
            return default_initial_state(self.n_particles, self.dim, self.total_energy)
        return np.array(self.initial_state)

    def grid(self) -> np.ndarray:
        if self.output_times is not None:
            return np.array(self.output_times)
        return np.linspace(0.0, self.t_final, self.grid_points)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "n_particles": self.n_particles,
            "dim": self.dim,
            "collision_rate": self.collision_rate,
            "field_strength": self.field_strength,
            "field_direction": list(self.field_direction),
            "total_energy": self.total_energy,
            "t_final": self.t_final,
            "ode_step": self.ode_step,
            "grid_points": self.grid_points,
            "initial_state": None if self.initial_state is None else list(self.initial_state),
            "output_times": None if self.output_times is None else list(self.output_times),
        }

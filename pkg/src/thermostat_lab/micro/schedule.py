"""Poisson collision schedules with Haar-random rotations."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..geometry import haar_rotations
from ..rng import as_generator


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    particle: int
    rotation: np.ndarray


@dataclass(frozen=True)
class Schedule(Sequence):
    """Collision events of all particles merged and sorted by time."""

    times: np.ndarray
    particles: np.ndarray
    rotations: np.ndarray

    def __len__(self):
        return self.times.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return CollisionEvent(float(self.times[i]), int(self.particles[i]), self.rotations[i])

    @classmethod
    def empty(cls, dim: int) -> "Schedule":
        return cls(np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros((0, dim, dim)))

    @classmethod
    def from_events(cls, events, dim: int) -> "Schedule":
        events = sorted(events, key=lambda e: e.time)
        if not events:
            return cls.empty(dim)
        return cls(
            np.array([e.time for e in events], dtype=float),
            np.array([e.particle for e in events], dtype=np.int64),
            np.array([e.rotation for e in events], dtype=float),
        )

    def for_particle(self, k: int) -> np.ndarray:
        return self.times[self.particles == k]


def poisson_times(rate: float, t_final: float, gen: np.random.Generator) -> np.ndarray:
    """Arrival times in (0, t_final] of a rate-``rate`` Poisson process."""
    if t_final <= 0:
        return np.zeros(0)
    mean = rate * t_final
    chunk = int(np.ceil(mean + 5.0 * np.sqrt(mean) + 16))
    times = np.cumsum(gen.exponential(1.0 / rate, chunk))
    while times[-1] <= t_final:
        more = times[-1] + np.cumsum(gen.exponential(1.0 / rate, chunk))
        times = np.concatenate([times, more])
    return times[times <= t_final]


def sample_collision_schedule(params, rng, t_final: float | None = None) -> Schedule:
    gen = as_generator(rng)
    horizon = params.t_final if t_final is None else t_final
    per_particle = [poisson_times(params.collision_rate, horizon, gen) for _ in range(params.n_particles)]
    times = np.concatenate(per_particle) if per_particle else np.zeros(0)
    particles = np.concatenate([np.full(t.size, k, dtype=np.int64) for k, t in enumerate(per_particle)])
    order = np.argsort(times, kind="stable")
    times = times[order]
    particles = particles[order]
    rotations = haar_rotations(params.dim, times.size, gen) if times.size else np.zeros((0, params.dim, params.dim))
    return Schedule(times, particles, rotations)

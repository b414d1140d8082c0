"""Slow/fast decomposition of the microscopic dynamics.

Between collisions the velocities follow the Gaussian-thermostat ODE; at a
collision of particle k its velocity and frame are left-multiplied by a Haar
rotation g. The slow variable ``u_k = phi_k^T p_k`` does not jump, and the
driver ``Phi_k(t) = int_0^t phi_k(s)^T nhat ds`` is piecewise linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientDataError, InvalidParameterError
from ..rng import RngStream, as_generator
from . import kernels
from .params import ModelParams
from .schedule import CollisionEvent, Schedule, sample_collision_schedule


@dataclass(frozen=True)
class ParticleSystemState:
    time: float
    p: np.ndarray

    def energy(self) -> float:
        return float(self.p @ self.p)


def thermostat_rhs(p, eps: float, nhat, U: float) -> np.ndarray:
    """Thermostat vector field ``eps*nhat - eps*(sum_j nhat.p_j / U) p_k`` per particle."""
    if not U > 0:
        raise InvalidParameterError("total energy U must be positive")
    p = np.asarray(p, dtype=float)
    nhat = np.asarray(nhat, dtype=float)
    d = nhat.size
    blocks = p.reshape(-1, d)
    current = float((blocks @ nhat).sum())
    return (eps * nhat[None, :] - (eps * current / U) * blocks).ravel()


def step_between_collisions(state: ParticleSystemState, dt: float, params: ModelParams) -> ParticleSystemState:
    """RK4 substeps of size <= ode_step, each followed by projection onto the sphere."""
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    p = np.array(state.p, dtype=float)
    kernels.advance(
        p, float(dt), params.ode_step, params.field_strength, params.nhat,
        params.total_energy, params.n_particles, params.dim,
    )
    return ParticleSystemState(state.time + dt, p)


def apply_collision(state: ParticleSystemState, event: CollisionEvent, dim: int) -> ParticleSystemState:
    if abs(event.time - state.time) > 1e-12 * max(1.0, abs(state.time)):
        raise InvalidParameterError("collision time does not match the state time")
    n = state.p.size // dim
    if not 0 <= event.particle < n:
        raise IndexError(f"particle index {event.particle} out of range for N={n}")
    p = np.array(state.p, dtype=float).reshape(n, dim)
    p[event.particle] = np.asarray(event.rotation) @ p[event.particle]
    return ParticleSystemState(state.time, p.ravel())


@dataclass(frozen=True)
class DriverPath:
    """Continuous piecewise-linear path through ``(times[i], values[i])``."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.times.ndim != 1 or self.values.shape[0] != self.times.size:
            raise ValueError("times and values must have matching first dimension")
        if self.times.size < 1 or np.any(np.diff(self.times) < 0):
            raise ValueError("knot times must be nondecreasing")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < self.start - 1e-12) or np.any(t > self.end + 1e-12):
            raise InsufficientDataError("evaluation time outside the path domain")
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2)
        t0 = self.times[idx]
        t1 = self.times[idx + 1]
        span = t1 - t0
        w = np.divide(t - t0, span, out=np.zeros_like(t, dtype=float), where=span > 0)
        w = np.asarray(w)[..., None]
        return (1.0 - w) * self.values[idx] + w * self.values[idx + 1]

    def slopes(self) -> np.ndarray:
        """Slope of each segment; zero-length segments report zero."""
        dt = np.diff(self.times)
        dv = np.diff(self.values, axis=0)
        return np.divide(dv, dt[:, None], out=np.zeros_like(dv), where=dt[:, None] > 0)

    def restrict(self, t0: float, t1: float) -> "DriverPath":
        inner = (self.times > t0) & (self.times < t1)
        times = np.concatenate([[t0], self.times[inner], [t1]])
        return DriverPath(times, self(times))


def rescale_driver(path: DriverPath, eps: float, t_max: float | None = None) -> DriverPath:
    """Return ``t -> eps * Phi(t / eps^2)`` on ``[0, t_max]``."""
    if not eps > 0:
        raise InvalidParameterError("eps must be positive")
    if t_max is not None:
        needed = t_max / eps**2
        if needed > path.end * (1.0 + 1e-12):
            raise InsufficientDataError(
                f"horizon {t_max} needs the driver up to {needed}, simulated only to {path.end}"
            )
        path = path.restrict(path.start, needed) if needed < path.end else path
    return DriverPath(path.times * eps**2, path.values * eps)


@dataclass(frozen=True)
class FrameProcess:
    """Cumulative rotations phi_k, piecewise constant and right-continuous."""

    n_particles: int
    dim: int
    schedule: Schedule

    def breakpoints(self, k: int) -> np.ndarray:
        return self.schedule.for_particle(k)

    def at(self, t: float) -> np.ndarray:
        """Recompute phi(t) from the event log, shape (N, d, d)."""
        phi = np.broadcast_to(np.eye(self.dim), (self.n_particles, self.dim, self.dim)).copy()
        for ev in self.schedule:
            if ev.time > t:
                break
            phi[ev.particle] = ev.rotation @ phi[ev.particle]
        return phi

    def psi(self, t: float, nhat) -> np.ndarray:
        """Stacked ``phi_k(t)^T nhat``."""
        return np.einsum("kab,a->kb", self.at(t), np.asarray(nhat)).ravel()


@dataclass
class Trajectory:
    params: ModelParams
    times: np.ndarray
    p: np.ndarray
    u: np.ndarray
    Phi: np.ndarray
    driver: DriverPath | None
    schedule: Schedule
    jumps: np.ndarray
    energy_error: float
    seed: int | None = None
    stream_index: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def frames(self) -> FrameProcess:
        return FrameProcess(self.params.n_particles, self.params.dim, self.schedule)

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.p.reshape(len(self.times), self.params.n_particles, self.params.dim), axis=2)


@dataclass
class Ensemble:
    """Grid samples of many independent trajectories (arrays are ``(n, G, N*d)``)."""

    params: ModelParams
    times: np.ndarray
    p: np.ndarray
    u: np.ndarray
    Phi: np.ndarray
    seed: int
    start: int
    energy_error: np.ndarray
    max_jump: np.ndarray
    event_counts: np.ndarray

    def speeds(self) -> np.ndarray:
        n, G, _ = self.p.shape
        return np.linalg.norm(self.p.reshape(n, G, self.params.n_particles, self.params.dim), axis=3)


def _pad(schedules: list[Schedule], d: int):
    n = len(schedules)
    emax = max((len(s) for s in schedules), default=0)
    ev_t = np.full((n, max(emax, 1)), np.inf)
    ev_k = np.zeros((n, max(emax, 1)), dtype=np.int64)
    ev_g = np.zeros((n, max(emax, 1), d, d))
    ev_n = np.zeros(n, dtype=np.int64)
    for r, s in enumerate(schedules):
        e = len(s)
        ev_t[r, :e] = s.times
        ev_k[r, :e] = s.particles
        ev_g[r, :e] = s.rotations
        ev_n[r] = e
    return ev_t, ev_k, ev_g, ev_n


def _run(params: ModelParams, schedules, p0s, record_knots: bool, which=None):
    ev_t, ev_k, ev_g, ev_n = _pad(schedules, params.dim)
    return kernels.simulate_batch(
        np.ascontiguousarray(p0s, dtype=float), params.nhat, float(params.field_strength),
        float(params.total_energy), float(params.ode_step), params.n_particles, params.dim,
        params.grid(), ev_t, ev_k, ev_g, ev_n, record_knots, which=which,
    )


def simulate_trajectory(
    params: ModelParams,
    rng,
    schedule: Schedule | None = None,
    record_driver: bool = True,
    which: str | None = None,
) -> Trajectory:
    """Simulate one trajectory on the output grid of ``params``.

    ``rng`` is an :class:`RngStream` (recorded in the result) or anything
    :func:`as_generator` accepts. Passing ``schedule`` replaces the Poisson
    schedule, e.g. an empty one or one with identity rotations.
    """
    if schedule is None:
        schedule = sample_collision_schedule(params, as_generator(rng))
    P, Uo, PhiG, knot_t, knot_phi, n_knots, jumps, err = _run(
        params, [schedule], params.p0()[None, :], record_driver, which
    )
    driver = None
    if record_driver:
        k = int(n_knots[0])
        driver = DriverPath(knot_t[0, :k].copy(), knot_phi[0, :k].copy())
    seed = rng.seed if isinstance(rng, RngStream) else None
    stream = rng.stream_index if isinstance(rng, RngStream) else None
    return Trajectory(
        params=params,
        times=params.grid(),
        p=P[0],
        u=Uo[0],
        Phi=PhiG[0],
        driver=driver,
        schedule=schedule,
        jumps=jumps[0, : len(schedule)].copy(),
        energy_error=float(err[0]),
        seed=seed,
        stream_index=stream,
    )


def simulate_ensemble(
    params: ModelParams,
    seed: int,
    n_traj: int,
    start: int = 0,
    chunk: int = 2000,
    which: str | None = None,
) -> Ensemble:
    """Independent trajectories, trajectory i drawing from ``RngStream(seed, start + i)``."""
    G = params.grid_points
    m = params.size
    P = np.empty((n_traj, G, m))
    Uo = np.empty((n_traj, G, m))
    PhiG = np.empty((n_traj, G, m))
    energy = np.empty(n_traj)
    max_jump = np.zeros(n_traj)
    counts = np.empty(n_traj, dtype=np.int64)
    p0 = params.p0()
    for lo in range(0, n_traj, chunk):
        hi = min(n_traj, lo + chunk)
        schedules = [sample_collision_schedule(params, RngStream(seed, start + i).generator()) for i in range(lo, hi)]
        p0s = np.broadcast_to(p0, (hi - lo, m))
        out = _run(params, schedules, p0s, False, which)
        P[lo:hi], Uo[lo:hi], PhiG[lo:hi] = out[0], out[1], out[2]
        jumps = out[6]
        energy[lo:hi] = out[7]
        counts[lo:hi] = [len(s) for s in schedules]
        max_jump[lo:hi] = jumps.max(axis=1) if jumps.size else 0.0
    return Ensemble(params, params.grid(), P, Uo, PhiG, seed, start, energy, max_jump, counts)

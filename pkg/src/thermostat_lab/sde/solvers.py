"""Limiting SDEs.

* ``strat-sphere``: ``du = (I - u u^T / U) o dW`` with Cov(W) = variance_rate * I
  (2/(lambda d) for the van Hove limit), Heun predictor-corrector plus radial
  projection.
* ``ito-speed``: the Itô SDE for the speeds, Euler-Maruyama with
  renormalization and step rejection near zero.
* ``ou``: ``dX = dB - X/2 dt``, sampled exactly.

Path i of an ensemble draws only from ``RngStream(seed, start + i)``; work is
chunked over paths so memory stays bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    InvalidInitialConditionError,
    InvalidParameterError,
    StepSizeError,
    UnsupportedModelError,
)
from ..rng import RngStream, as_generator

MODELS = ("strat-sphere", "ito-speed", "ou")
MAX_HALVINGS = 40
_NOISE, _REFINE, _AUX = 0, 1, 2


def brownian_increments(m: int, variance_rate: float, h: float, rng) -> np.ndarray:
    """``m`` i.i.d. centered Gaussians with variance ``variance_rate * h``."""
    if not h > 0:
        raise InvalidParameterError("h must be positive")
    if variance_rate < 0:
        raise InvalidParameterError("variance_rate must be nonnegative")
    z = as_generator(rng).standard_normal(m)
    return z * math.sqrt(variance_rate * h)


@dataclass(frozen=True)
class SdeConfig:
    model: str
    n_particles: int
    dim: int
    collision_rate: float = 1.0
    total_energy: float = 1.0
    step: float = 1e-3
    t_final: float = 1.0
    initial_state: tuple | None = None
    variance_rate: float | None = None
    grid_points: int = 2

    def __post_init__(self):
        if self.model not in MODELS:
            raise UnsupportedModelError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.model == "ito-speed" and self.dim < 2:
            raise UnsupportedModelError("the speed SDE is only valid for dim >= 2")
        if self.n_particles < 1 or self.dim < 1:
            raise InvalidParameterError("n_particles and dim must be >= 1")
        for name in ("collision_rate", "total_energy", "step", "t_final"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.grid_points < 2:
            raise InvalidParameterError("grid_points must be >= 2")
        if self.initial_state is not None:
            object.__setattr__(self, "initial_state", tuple(float(x) for x in self.initial_state))
        x0 = self.x0()
        U = self.total_energy
        if self.model == "strat-sphere":
            if x0.size != self.n_particles * self.dim or abs(x0 @ x0 - U) > 1e-10 * U:
                raise InvalidInitialConditionError("strat-sphere needs |u(0)|^2 = U with N*d components")
        elif self.model == "ito-speed":
            if x0.size != self.n_particles or np.any(x0 <= 0) or abs(x0 @ x0 - U) > 1e-10 * U:
                raise InvalidInitialConditionError("ito-speed needs N positive speeds with sum v^2 = U")

    @property
    def delta(self) -> float:
        return 2.0 / (self.collision_rate * self.dim)

    @property
    def noise_rate(self) -> float:
        return self.delta if self.variance_rate is None else float(self.variance_rate)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.step)))

    @property
    def state_size(self) -> int:
        if self.model == "strat-sphere":
            return self.n_particles * self.dim
        if self.model == "ito-speed":
            return self.n_particles
        return 1

    def x0(self) -> np.ndarray:
        if self.initial_state is not None:
            return np.array(self.initial_state)
        N, d, U = self.n_particles, self.dim, self.total_energy
        if self.model == "ito-speed":
            return np.full(N, math.sqrt(U / N))
        if self.model == "ou":
            return np.zeros(1)
        from ..micro.params import default_initial_state

        return default_initial_state(N, d, U)

    def record_steps(self) -> np.ndarray:
        """Step indices at which the state is stored (always includes 0 and the last)."""
        return np.unique(np.round(np.linspace(0, self.n_steps, self.grid_points)).astype(int))

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "n_particles": self.n_particles,
            "dim": self.dim,
            "collision_rate": self.collision_rate,
            "total_energy": self.total_energy,
            "step": self.step,
            "t_final": self.t_final,
            "initial_state": None if self.initial_state is None else list(self.initial_state),
            "variance_rate": self.noise_rate,
            "grid_points": self.grid_points,
        }


@dataclass
class PathSample:
    times: np.ndarray
    values: np.ndarray  # (paths, G, state)
    seed: int
    start: int
    config: SdeConfig
    rejections: int = 0
    meta: dict = field(default_factory=dict)


class _NoiseBlocks:
    """Standard normals for a chunk of paths, each path reading its own stream."""

    def __init__(self, gens, m: int, block: int = 64):
        self.gens = gens
        self.m = m
        self.block = block
        self.buf = None
        self.ptr = block

    def next(self) -> np.ndarray:
        if self.ptr == self.block:
            self.buf = np.stack([g.standard_normal((self.block, self.m)) for g in self.gens], axis=1)
            self.ptr = 0
        out = self.buf[self.ptr]
        self.ptr += 1
        return out


def _auto_chunk(m: int, block: int = 64) -> int:
    return int(max(64, min(10_000, 4_000_000 // (m * block))))


def _chunks(n_paths: int, chunk: int):
    for lo in range(0, n_paths, chunk):
        yield lo, min(n_paths, lo + chunk)


def _tangent(u, xi, U):
    return xi - u * ((u * xi).sum(axis=1) / U)[:, None]


def heun_sphere_step(u, dW, U):
    """One Stratonovich Heun step on the sphere |u|^2 = U, rows are paths."""
    drift0 = _tangent(u, dW, U)
    pred = u + drift0
    new = u + 0.5 * (drift0 + _tangent(pred, dW, U))
    return new * np.sqrt(U / (new * new).sum(axis=1))[:, None]


def strat_sphere_solve(cfg: SdeConfig, seed: int, n_paths: int, start: int = 0, chunk: int | None = None) -> PathSample:
    if cfg.model != "strat-sphere":
        raise UnsupportedModelError("strat_sphere_solve needs model='strat-sphere'")
    m = cfg.state_size
    U = cfg.total_energy
    h = cfg.t_final / cfg.n_steps
    scale = math.sqrt(cfg.noise_rate * h)
    rec = cfg.record_steps()
    out = np.empty((n_paths, rec.size, m))
    x0 = cfg.x0()
    for lo, hi in _chunks(n_paths, chunk or _auto_chunk(m)):
        gens = [RngStream(seed, start + i).generator(_NOISE) for i in range(lo, hi)]
        noise = _NoiseBlocks(gens, m)
        u = np.tile(x0, (hi - lo, 1))
        r = 0
        if rec[0] == 0:
            out[lo:hi, 0] = u
            r = 1
        for step in range(1, cfg.n_steps + 1):
            dW = noise.next() * scale
            if scale > 0:
                u = heun_sphere_step(u, dW, U)
            if r < rec.size and rec[r] == step:
                out[lo:hi, r] = u
                r += 1
    return PathSample(rec * h, out, seed, start, cfg)


def _speed_drift(v, delta, d, U, N):
    return delta * ((d - 1) / (2.0 * v) - (N * d - 1) * v / (2.0 * U))


def _speed_noise(v, dB, delta, U):
    return math.sqrt(delta) * (dB - v * ((v * dB).sum(axis=-1, keepdims=True) / U))


def _renormalize(v, U, N):
    if N == 1:
        return np.full_like(v, math.sqrt(U))
    return v * np.sqrt(U / (v * v).sum(axis=-1, keepdims=True))


def _em_speed(v, dB, h, delta, d, U, N):
    new = v + _speed_drift(v, delta, d, U, N) * h + _speed_noise(v, dB, delta, U)
    ok = np.all(new > 0, axis=-1) & np.all(np.isfinite(new), axis=-1)
    return _renormalize(np.where(new > 0, new, 1.0), U, N), ok


def _refine(v, dB, h, depth, gen, consts, counter):
    """Retry a rejected step as two half steps along the Brownian bridge."""
    if depth > MAX_HALVINGS:
        raise StepSizeError(f"speed SDE step still rejected after {MAX_HALVINGS} halvings")
    counter[0] += 1
    half = 0.5 * h
    dB1 = 0.5 * dB + math.sqrt(h / 4.0) * gen.standard_normal(dB.size)
    dB2 = dB - dB1
    for inc in (dB1, dB2):
        new, ok = _em_speed(v[None, :], inc[None, :], half, *consts)
        v = new[0] if ok[0] else _refine(v, inc, half, depth + 1, gen, consts, counter)
    return v


def ito_speed_solve(cfg: SdeConfig, seed: int, n_paths: int, start: int = 0, chunk: int | None = None) -> PathSample:
    """Euler-Maruyama for the speed SDE.

    After each step the speeds are rescaled to ``sum v^2 = U``. A step leaving
    the positive orthant is rejected and redone as two half steps whose
    Brownian increments are a bridge split of the original one, so the driving
    path is unchanged. The total number of halvings is reported.
    """
    if cfg.model != "ito-speed":
        raise UnsupportedModelError("ito_speed_solve needs model='ito-speed'")
    N, d, U = cfg.n_particles, cfg.dim, cfg.total_energy
    h = cfg.t_final / cfg.n_steps
    delta = cfg.delta if cfg.variance_rate is None else cfg.noise_rate
    consts = (delta, d, U, N)
    sqrt_h = math.sqrt(h)
    rec = cfg.record_steps()
    out = np.empty((n_paths, rec.size, N))
    x0 = cfg.x0()
    counter = [0]
    for lo, hi in _chunks(n_paths, chunk or _auto_chunk(N)):
        streams = [RngStream(seed, start + i) for i in range(lo, hi)]
        noise = _NoiseBlocks([s.generator(_NOISE) for s in streams], N)
        refine_gens = {}
        v = np.tile(x0, (hi - lo, 1))
        r = 0
        if rec[0] == 0:
            out[lo:hi, 0] = v
            r = 1
        for step in range(1, cfg.n_steps + 1):
            dB = noise.next() * sqrt_h
            new, ok = _em_speed(v, dB, h, *consts)
            for row in np.nonzero(~ok)[0]:
                gen = refine_gens.setdefault(row, streams[row].generator(_REFINE))
                new[row] = _refine(v[row], dB[row], h, 1, gen, consts, counter)
            v = new
            if r < rec.size and rec[r] == step:
                out[lo:hi, r] = v
                r += 1
    return PathSample(rec * h, out, seed, start, cfg, rejections=counter[0])


def ou_exact_step(x, h: float, rng=None, xi=None):
    """Exact transition of ``dX = dB - X/2 dt`` over time h.

    ``X(t+h) = exp(-h/2) X(t) + sqrt(1 - exp(-h)) * xi`` with xi standard
    normal; pass ``xi`` to supply the normal draw yourself.
    """
    if not h > 0:
        raise InvalidParameterError("h must be positive")
    x = np.asarray(x, dtype=float)
    if xi is None:
        xi = as_generator(rng).standard_normal(x.shape)
    out = math.exp(-0.5 * h) * x + math.sqrt(-math.expm1(-h)) * np.asarray(xi)
    return float(out) if out.ndim == 0 else out


def ou_paths(cfg: SdeConfig, seed: int, n_paths: int, start: int = 0) -> PathSample:
    if cfg.model != "ou":
        raise UnsupportedModelError("ou_paths needs model='ou'")
    h = cfg.t_final / cfg.n_steps
    rec = cfg.record_steps()
    out = np.empty((n_paths, rec.size, 1))
    x0 = float(cfg.x0()[0])
    for i in range(n_paths):
        gen = RngStream(seed, start + i).generator(_NOISE)
        xi = gen.standard_normal(cfg.n_steps)
        decay = math.exp(-0.5 * h)
        amp = math.sqrt(-math.expm1(-h))
        x = x0
        path = np.empty(cfg.n_steps + 1)
        path[0] = x
        for k in range(cfg.n_steps):
            x = decay * x + amp * xi[k]
            path[k + 1] = x
        out[i, :, 0] = path[rec]
    return PathSample(rec * h, out, seed, start, cfg)


def _ou_coupling(h: float):
    """Coefficients expressing the exact OU noise through the Brownian increment.

    Over one step, I = int_0^h exp(-(h-s)/2) dB(s) and dB are jointly Gaussian
    with Var(I) = 1 - e^-h and Cov(I, dB) = 2(1 - e^{-h/2}).
    """
    var_i = -math.expm1(-h)
    cov = 2.0 * (-math.expm1(-0.5 * h))
    beta = cov / h
    resid = math.sqrt(max(var_i - cov * beta, 0.0))
    return beta, resid


def ou_comparison_start(n: int, xi1: float) -> np.ndarray:
    """``xi_1`` fixed, remaining coordinates equal, on the sphere |x|^2 = n."""
    if xi1**2 >= n:
        raise InvalidParameterError("xi1^2 must be smaller than n")
    rest = math.sqrt((n - xi1**2) / (n - 1))
    return np.concatenate([[xi1], np.full(n - 1, rest)])


def ou_projection_experiment(
    n: int,
    t_final: float,
    paths: int,
    seed: int,
    step: float = 0.01,
    xi1: float = 1.0,
    chunk: int | None = None,
) -> dict:
    """First coordinate of the n-dimensional sphere diffusion against OU.

    The sphere diffusion (radius sqrt(n), unit-rate noise) is run together with
    an exactly sampled OU process driven by the same first Brownian coordinate;
    a second, independent OU ensemble provides the two-sample comparison of the
    time-``t_final`` marginals.
    """
    from ..stats.ks import ks_two_sample

    if n < 2:
        raise InvalidParameterError("n must be >= 2")
    cfg = SdeConfig("strat-sphere", n_particles=n, dim=1, total_energy=float(n), step=step,
                    t_final=t_final, initial_state=tuple(ou_comparison_start(n, xi1)), variance_rate=1.0)
    h = cfg.t_final / cfg.n_steps
    sqrt_h = math.sqrt(h)
    decay = math.exp(-0.5 * h)
    beta, resid = _ou_coupling(h)
    u1_final = np.empty(paths)
    x_final = np.empty(paths)
    sup_dev = np.empty(paths)
    u1_sq = np.empty(paths)
    for lo, hi in _chunks(paths, chunk or _auto_chunk(n)):
        streams = [RngStream(seed, i) for i in range(lo, hi)]
        noise = _NoiseBlocks([s.generator(_NOISE) for s in streams], n)
        aux = _NoiseBlocks([s.generator(_AUX) for s in streams], 1)
        u = np.tile(cfg.x0(), (hi - lo, 1))
        x = np.full(hi - lo, xi1)
        dev = np.zeros(hi - lo)
        for _ in range(cfg.n_steps):
            dW = noise.next() * sqrt_h
            u = heun_sphere_step(u, dW, float(n))
            x = decay * x + beta * dW[:, 0] + resid * aux.next()[:, 0]
            dev = np.maximum(dev, np.abs(u[:, 0] - x))
        u1_final[lo:hi] = u[:, 0]
        x_final[lo:hi] = x
        sup_dev[lo:hi] = dev
        u1_sq[lo:hi] = u[:, 0] ** 2

    ou_cfg = SdeConfig("ou", 1, 1, step=h, t_final=t_final, initial_state=(xi1,))
    independent = ou_paths(ou_cfg, seed, paths, start=paths)
    ks = ks_two_sample(u1_final, independent.values[:, -1, 0])
    return {
        "n": n,
        "t_final": t_final,
        "paths": paths,
        "step": h,
        "seed": seed,
        "ks": ks.to_dict(),
        "mean_sup_deviation": float(sup_dev.mean()),
        "sup_deviation_se": float(sup_dev.std(ddof=1) / math.sqrt(paths)),
        "u1_second_moment": float(u1_sq.mean()),
        "u1_second_moment_se": float(u1_sq.std(ddof=1) / math.sqrt(paths)),
        "coupled_final_gap_rms": float(np.sqrt(np.mean((u1_final - x_final) ** 2))),
    }

"""Weak convergence of the microscopic speeds and the long-time law."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameterError
from ..micro.trajectory import simulate_ensemble
from ..rng import RngStream
from ..sde.solvers import SdeConfig, ito_speed_solve, strat_sphere_solve
from . import targets
from .accum import mean_and_se
from .estimate import CorrelationEstimate
from .ks import ks_two_sample

MAX_MICRO_TIME = 1e4


def moments(x, orders=(1, 2, 3, 4)) -> list[float]:
    x = np.asarray(x, dtype=float)
    return [float(np.mean(x**k)) for k in orders]


def speeds_of(u, n_particles: int, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.linalg.norm(u.reshape(*u.shape[:-1], n_particles, dim), axis=-1)


@dataclass
class WeakConvergenceReport:
    eps: list
    times: list
    rows: list = field(default_factory=list)
    omitted: list = field(default_factory=list)
    seed: int = 0
    paths: int = 0

    def ks(self, observable: str, t: float, coordinate: int) -> list[tuple[float, float]]:
        """(eps, statistic) pairs in the order of the eps schedule."""
        return [
            (r["eps"], r["ks"]["statistic"])
            for r in self.rows
            if r["observable"] == observable and r["t"] == t and r["coordinate"] == coordinate
        ]

    def monotone(self, observable: str, t: float, coordinate: int) -> bool:
        stats = [s for _, s in self.ks(observable, t, coordinate)]
        return len(stats) >= 2 and all(b < a for a, b in zip(stats, stats[1:]))

    def final_pass(self, observable: str, t: float, coordinate: int, alpha: float = 0.05) -> bool:
        rows = [
            r for r in self.rows
            if r["observable"] == observable and r["t"] == t and r["coordinate"] == coordinate
        ]
        if not rows:
            return False
        last = min(rows, key=lambda r: r["eps"])
        return last["ks"]["statistic"] < last["ks"][f"critical_{alpha:g}"]

    def verdicts(self, alpha: float = 0.05) -> list[dict]:
        out = []
        keys = sorted({(r["observable"], r["t"], r["coordinate"]) for r in self.rows})
        for obs, t, c in keys:
            out.append({
                "observable": obs,
                "t": t,
                "coordinate": c,
                "ks_by_eps": self.ks(obs, t, c),
                "monotone": self.monotone(obs, t, c),
                "final_pass": self.final_pass(obs, t, c, alpha),
            })
        return out

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "times": self.times,
            "seed": self.seed,
            "paths": self.paths,
            "rows": self.rows,
            "omitted": self.omitted,
            "verdicts": self.verdicts(),
        }


def weak_convergence_study(eps_list, params, times, paths: int, seed: int, sde_step: float = 2e-3,
                           max_micro_time: float = MAX_MICRO_TIME, which=None) -> WeakConvergenceReport:
    """Compare speeds of the microscopic model at time t / eps^2 with the limit.

    ``params`` fixes N, d, lambda, U, nhat, the ODE step and the initial state;
    its field strength and horizon are replaced by each eps. Speeds are
    compared per coordinate with the speed SDE (observable ``v``) and the
    block norms |u_k| with the sphere SDE (observable ``u_norm``).
    Micro runs use trajectory streams ``0..paths-1`` of ``seed``; the limit
    samples use ``seed + 1``.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidParameterError("eps schedule must be positive and strictly decreasing")
    times = sorted(float(t) for t in times)
    if not times or times[0] <= 0:
        raise InvalidParameterError("observation times must be positive")
    N, d, U, lam = params.n_particles, params.dim, params.total_energy, params.collision_rate
    x0 = params.p0()
    limit_seed = seed + 1
    ito, strat = {}, {}
    for t in times:
        cfg = SdeConfig("ito-speed", N, d, lam, U, step=sde_step, t_final=t, initial_state=tuple(speeds_of(x0, N, d)))
        ito[t] = ito_speed_solve(cfg, limit_seed, paths).values[:, -1]
        cfg = SdeConfig("strat-sphere", N, d, lam, U, step=sde_step, t_final=t, initial_state=tuple(x0))
        strat[t] = speeds_of(strat_sphere_solve(cfg, limit_seed, paths).values[:, -1], N, d)

    report = WeakConvergenceReport(eps_list, times, seed=seed, paths=paths)
    for eps in eps_list:
        horizon = times[-1] / eps**2
        if horizon > max_micro_time:
            report.omitted.append({"eps": eps, "reason": f"micro horizon {horizon:g} exceeds {max_micro_time:g}"})
            continue
        out_times = tuple([0.0] + [t / eps**2 for t in times])
        micro = params.with_(field_strength=eps, t_final=out_times[-1], output_times=out_times)
        ens = simulate_ensemble(micro, seed, paths, which=which)
        v = ens.speeds()
        u_norm = speeds_of(ens.u, N, d)
        for i, t in enumerate(times, start=1):
            for obs, sample, ref in (("v", v[:, i], ito[t]), ("u_norm", u_norm[:, i], strat[t])):
                for c in range(N):
                    ks = ks_two_sample(sample[:, c], ref[:, c])
                    report.rows.append({
                        "eps": eps,
                        "t": t,
                        "observable": obs,
                        "coordinate": c,
                        "ks": ks.to_dict(),
                        "moments_micro": moments(sample[:, c]),
                        "moments_limit": moments(ref[:, c]),
                    })
    return report


@dataclass
class StationaryLawReport:
    second_moment: CorrelationEstimate
    ks_rows: list
    sde_time: float
    micro_eps: float
    micro_time: float
    paths: int
    seed: int

    def passes(self, alpha: float = 0.05) -> bool:
        return self.second_moment.passes(3.0) and all(r["statistic"] < r[f"critical_{alpha:g}"] for r in self.ks_rows)

    def to_dict(self) -> dict:
        return {
            "second_moment": self.second_moment.to_dict(seed_range=(0, self.paths)),
            "speed_ks": self.ks_rows,
            "sde_time": self.sde_time,
            "micro_eps": self.micro_eps,
            "micro_time": self.micro_time,
            "paths": self.paths,
            "seed": self.seed,
            "pass": self.passes(),
        }


def uniform_sphere_speeds(n_particles: int, dim: int, U: float, n: int, rng) -> np.ndarray:
    """Speeds of points drawn uniformly from the energy sphere."""
    gen = RngStream(rng).generator(2) if isinstance(rng, (int, np.integer)) else rng.generator(2)
    z = gen.standard_normal((n, n_particles * dim))
    z *= np.sqrt(U) / np.linalg.norm(z, axis=1, keepdims=True)
    return speeds_of(z, n_particles, dim)


def stationary_law_check(params, paths: int, seed: int, sde_time: float = 20.0, sde_step: float = 5e-3,
                         micro_eps: float = 0.2, micro_time: float = 10.0, which=None) -> StationaryLawReport:
    """Long-time law of the sphere SDE and of the microscopic speeds.

    The SDE sample gives E[u_i u_j] against U/(N d) delta_ij. The microscopic
    speeds at macroscopic time ``micro_time`` are compared per particle with
    speeds of uniform points on the energy sphere (an independent sample).
    """
    N, d, U, lam = params.n_particles, params.dim, params.total_energy, params.collision_rate
    cfg = SdeConfig("strat-sphere", N, d, lam, U, step=sde_step, t_final=sde_time, initial_state=tuple(params.p0()))
    u = strat_sphere_solve(cfg, seed, paths).values[:, -1]
    mean, se, n = mean_and_se(np.einsum("ri,rj->rij", u, u))
    m = N * d
    est = CorrelationEstimate(mean, se, n, targets.diag(U / m, m), "sphere_second_moment", label="E[u u^T]")

    T = micro_time / micro_eps**2
    micro = params.with_(field_strength=micro_eps, t_final=T, output_times=(0.0, T))
    v = simulate_ensemble(micro, seed + 1, paths, which=which).speeds()[:, -1]
    ref = uniform_sphere_speeds(N, d, U, paths, RngStream(seed + 2))
    rows = []
    for c in range(N):
        ks = ks_two_sample(v[:, c], ref[:, c]).to_dict()
        ks["coordinate"] = c
        rows.append(ks)
    return StationaryLawReport(est, rows, sde_time, micro_eps, micro_time, paths, seed)

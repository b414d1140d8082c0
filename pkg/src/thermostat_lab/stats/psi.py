"""Ensembles of the stacked frame process psi(t) = (phi_k(t)^T nhat)_k."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInitialConditionError, InvalidParameterError
from ..geometry import haar_rotations, rotation_taking
from ..micro.schedule import poisson_times
from ..rng import RngStream
from .kernels import frame_lift

MODES = ("haar", "shift", "conditioned", "identity")

# substreams of a trajectory's RngStream
_EVENTS, _FRAMES = 0, 2


@dataclass
class StationaryDriverEnsemble:
    """psi on a uniform grid plus exact unit-window integrals.

    ``V[r, j] = int_j^{j+1} psi`` and ``HX[r, j] = int_j^{j+1} H_j(s) (x) psi(s) ds``
    with ``H_j(s) = int_j^s psi``. ``stationary`` is set for the Haar and
    shift modes.
    """

    n_particles: int
    dim: int
    collision_rate: float
    nhat: np.ndarray
    horizon: float
    times: np.ndarray
    psi: np.ndarray
    V: np.ndarray
    HX: np.ndarray
    mode: str
    seed: int
    start: int
    initial: np.ndarray | None = None

    @property
    def stationary(self) -> bool:
        return self.mode in ("haar", "shift")

    @property
    def n_traj(self) -> int:
        return self.psi.shape[0]

    @property
    def n_windows(self) -> int:
        return self.V.shape[1]

    @property
    def size(self) -> int:
        return self.n_particles * self.dim

    @property
    def grid_step(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def block_norms(self) -> np.ndarray:
        n, G, _ = self.psi.shape
        return np.linalg.norm(self.psi.reshape(n, G, self.n_particles, self.dim), axis=3)

    def seed_range(self) -> tuple[int, int]:
        return (self.start, self.start + self.n_traj)


def _events(N, d, lam, horizon, gen, shift):
    """Per-particle Poisson events on [0, horizon]; with ``shift`` also the
    frames accumulated up to tau = max first arrival, after which time restarts."""
    if not shift:
        per = [poisson_times(lam, horizon, gen) for _ in range(N)]
        pre = None
    else:
        first = gen.exponential(1.0 / lam, N)
        tau = first.max()
        per, pre = [], []
        for k in range(N):
            later = first[k] + poisson_times(lam, tau + horizon - first[k], gen)
            tk = np.concatenate([[first[k]], later])
            pre.append(int(np.sum(tk <= tau)))
            per.append(tk - tau)
    times = np.concatenate(per)
    parts = np.concatenate([np.full(t.size, k, dtype=np.int64) for k, t in enumerate(per)])
    rot = haar_rotations(d, times.size, gen) if times.size else np.zeros((0, d, d))
    phi0 = None
    if shift:
        # fold the pre-tau rotations of each particle into its starting frame
        phi0 = np.tile(np.eye(d), (N, 1, 1))
        for k in range(N):
            idx = np.flatnonzero(parts == k)[: pre[k]]
            for i in idx:
                phi0[k] = rot[i] @ phi0[k]
        keep = times > 0.0
        times, parts, rot = times[keep], parts[keep], rot[keep]
    order = np.argsort(times, kind="stable")
    return times[order], parts[order], rot[order], phi0


def conditioning_frames(a, nhat) -> np.ndarray:
    """Frames phi_k with phi_k^T nhat = a_k, so that psi(0) = a."""
    nhat = np.asarray(nhat, dtype=float)
    d = nhat.size
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size % d:
        raise InvalidInitialConditionError("conditioning vector must stack d-blocks")
    blocks = a.reshape(-1, d)
    if not np.allclose(np.linalg.norm(blocks, axis=1), 1.0, rtol=0, atol=1e-12):
        raise InvalidInitialConditionError("each d-block of the conditioning vector must be a unit vector")
    return np.array([rotation_taking(b, nhat) for b in blocks])


def _pad(batch, d):
    n = len(batch)
    emax = max(1, max(b[0].size for b in batch))
    ev_t = np.full((n, emax), np.inf)
    ev_k = np.zeros((n, emax), dtype=np.int64)
    ev_g = np.zeros((n, emax, d, d))
    ev_n = np.zeros(n, dtype=np.int64)
    for r, (t, k, g) in enumerate(batch):
        ev_t[r, : t.size] = t
        ev_k[r, : t.size] = k
        ev_g[r, : t.size] = g
        ev_n[r] = t.size
    return ev_t, ev_k, ev_g, ev_n


def batch_inputs(N, d, lam, nhat, horizon, seed, start, n_traj, mode="identity", initial=None):
    """Starting frames and padded event arrays for ``frame_lift``."""
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}")
    phi_cond = conditioning_frames(initial, nhat) if mode == "conditioned" else None
    batch, phis = [], np.empty((n_traj, N, d, d))
    for r in range(n_traj):
        stream = RngStream(seed, start + r)
        t, k, g, phi0 = _events(N, d, lam, horizon, stream.generator(_EVENTS), mode == "shift")
        if mode == "haar":
            phi0 = haar_rotations(d, N, stream.generator(_FRAMES))
        elif mode == "conditioned":
            phi0 = phi_cond
        elif mode == "identity":
            phi0 = np.tile(np.eye(d), (N, 1, 1))
        phis[r] = phi0
        batch.append((t, k, g))
    return (phis, *_pad(batch, d))


def lift_batch(N, d, lam, nhat, grid, seed, start, n_traj, mode="identity", initial=None, which=None):
    """psi, X and anchored A on ``grid`` for trajectories ``start .. start+n_traj-1``."""
    phis, ev_t, ev_k, ev_g, ev_n = batch_inputs(N, d, lam, nhat, float(grid[-1]), seed, start, n_traj, mode, initial)
    return frame_lift(phis, nhat, grid, ev_t, ev_k, ev_g, ev_n, which=which)


def simulate_stationary_psi(
    params,
    horizon: float,
    rng,
    n_traj: int = 1,
    grid_step: float = 0.5,
    mode: str = "haar",
    initial=None,
    chunk: int = 1000,
    which: str | None = None,
) -> StationaryDriverEnsemble:
    """Sample psi on ``[0, horizon]`` for ``n_traj`` independent trajectories.

    ``params`` supplies N, d, lambda and nhat (a :class:`ModelParams`).
    ``rng`` is a master seed or an :class:`RngStream`; trajectory i uses
    ``RngStream(seed, start + i)``. Modes: ``haar`` draws phi_k(0) from Haar
    measure, ``shift`` restarts the clock at the last first-collision time,
    ``conditioned`` starts from frames with psi(0) = ``initial``, ``identity``
    starts from phi_k(0) = I.
    """
    if not horizon > 0:
        raise InvalidParameterError("horizon must be positive")
    if not grid_step > 0:
        raise InvalidParameterError("grid_step must be positive")
    if mode == "conditioned" and initial is None:
        raise InvalidInitialConditionError("conditioned mode needs an initial psi")
    seed, start = (rng.seed, rng.stream_index) if isinstance(rng, RngStream) else (int(rng), 0)
    N, d, lam = params.n_particles, params.dim, params.collision_rate
    nhat = params.nhat
    n_win = int(np.floor(horizon + 1e-12))
    n_grid = int(np.floor(horizon / grid_step + 1e-9))
    times = grid_step * np.arange(n_grid + 1)
    # union of the output grid and integer window edges, on which V and HX are read off
    lift_grid = np.union1d(times, np.arange(n_win + 1, dtype=float))
    at_grid = np.searchsorted(lift_grid, times)
    at_int = np.searchsorted(lift_grid, np.arange(n_win + 1, dtype=float))
    m = N * d
    psi = np.empty((n_traj, times.size, m))
    V = np.empty((n_traj, n_win, m))
    HX = np.empty((n_traj, n_win, m, m))
    for lo in range(0, n_traj, chunk):
        hi = min(n_traj, lo + chunk)
        P, X, A = lift_batch(N, d, lam, nhat, lift_grid, seed, start + lo, hi - lo, mode, initial, which)
        psi[lo:hi] = P[:, at_grid]
        Xi, Ai = X[:, at_int], A[:, at_int]
        inc = np.diff(Xi, axis=1)
        V[lo:hi] = inc
        HX[lo:hi] = Ai[:, 1:] - Ai[:, :-1] - np.einsum("rji,rjk->rjik", Xi[:, :-1], inc)
    return StationaryDriverEnsemble(
        n_particles=N,
        dim=d,
        collision_rate=lam,
        nhat=nhat,
        horizon=float(horizon),
        times=times,
        psi=psi,
        V=V,
        HX=HX,
        mode=mode,
        seed=seed,
        start=start,
        initial=None if initial is None else np.asarray(initial, dtype=float),
    )

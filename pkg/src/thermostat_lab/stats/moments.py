"""Moment scaling of rescaled driver increments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, InvalidParameterError
from .psi import lift_batch


@dataclass
class IncrementEnsemble:
    """Norms of W^eps(s, s+g) and of the level-2 increment (Frobenius) per gap g.

    ``level1[i]`` and ``level2[i]`` have shape (trajectories, positions) for
    ``gaps[i]``; positions are all grid starts s with s + g within the horizon.
    """

    eps: float
    gaps: np.ndarray
    level1: list
    level2: list
    seed: int
    start: int
    n_traj: int


@dataclass
class MomentBoundFit:
    q: float
    level: int
    gaps: np.ndarray
    norms: np.ndarray
    slope: float
    intercept: float

    @property
    def decades(self) -> float:
        return float(np.log10(self.gaps.max() / self.gaps.min()))

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "level": self.level,
            "gaps": self.gaps.tolist(),
            "norms": self.norms.tolist(),
            "slope": self.slope,
            "intercept": self.intercept,
            "decades": self.decades,
        }


def geometric_gaps(base: float, count: int, ratio: float = 2.0) -> np.ndarray:
    return base * ratio ** np.arange(count)


def driver_increments(params, eps: float, gaps, horizon: float, n_traj: int, seed: int, start: int = 0,
                      base_step: float | None = None, chunk: int = 200, which=None) -> IncrementEnsemble:
    """Sample increments of the rescaled driver W^eps(t) = eps Phi(t / eps^2) and its lift.

    Frames start at the identity, as in the microscopic model. Gaps must be
    integer multiples of ``base_step`` (default: the smallest gap).
    """
    if not eps > 0:
        raise InvalidParameterError("eps must be positive")
    gaps = np.asarray(gaps, dtype=float)
    base = float(gaps.min()) if base_step is None else float(base_step)
    steps = np.rint(gaps / base).astype(int)
    if np.any(np.abs(steps * base - gaps) > 1e-9 * gaps) or np.any(steps < 1):
        raise InvalidParameterError("gaps must be positive multiples of base_step")
    n_grid = int(math.floor(horizon / base + 1e-9))
    if steps.max() > n_grid:
        raise InvalidParameterError("largest gap exceeds the horizon")
    macro = base * np.arange(n_grid + 1)
    micro = macro / eps**2
    N, d = params.n_particles, params.dim
    lvl1 = [[] for _ in gaps]
    lvl2 = [[] for _ in gaps]
    for lo in range(0, n_traj, chunk):
        hi = min(n_traj, lo + chunk)
        _, X, A = lift_batch(N, d, params.collision_rate, params.nhat, micro, seed, start + lo, hi - lo, "identity", None, which)
        W = eps * X
        WW = eps**2 * A
        for i, s in enumerate(steps):
            dW = W[:, s:] - W[:, :-s]
            dWW = WW[:, s:] - WW[:, :-s] - np.einsum("rgi,rgj->rgij", W[:, :-s], dW)
            lvl1[i].append(np.linalg.norm(dW, axis=2))
            lvl2[i].append(np.linalg.norm(dWW, axis=(2, 3)))
    return IncrementEnsemble(
        eps=eps,
        gaps=gaps,
        level1=[np.concatenate(x) for x in lvl1],
        level2=[np.concatenate(x) for x in lvl2],
        seed=seed,
        start=start,
        n_traj=n_traj,
    )


def moment_scaling_fit(increments: IncrementEnsemble, q: float, level: int) -> MomentBoundFit:
    """Log-log slope of the L^{2q} (level 1) or L^q (level 2) norm against the gap."""
    if level not in (1, 2):
        raise InvalidParameterError("level must be 1 or 2")
    if not q > 3:
        raise InvalidParameterError("moment order q must exceed 3")
    gaps = np.asarray(increments.gaps, dtype=float)
    if np.unique(gaps).size < 5:
        raise InsufficientDataError("need at least 5 distinct gap sizes")
    if np.log10(gaps.max() / gaps.min()) < 2.0 - 1e-12:
        raise InsufficientDataError("gap sizes must span at least two decades")
    samples = increments.level1 if level == 1 else increments.level2
    p = 2.0 * q if level == 1 else float(q)
    norms = np.array([np.mean(np.asarray(x, dtype=float) ** p) ** (1.0 / p) for x in samples])
    slope, intercept = np.polyfit(np.log(gaps), np.log(norms), 1)
    return MomentBoundFit(float(q), level, gaps, norms, float(slope), float(intercept))

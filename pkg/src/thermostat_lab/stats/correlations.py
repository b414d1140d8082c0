"""Correlation and Green-Kubo estimators on stationary psi ensembles.

Each estimator forms one statistic per trajectory (an average over the time
positions available inside that trajectory) and reports the ensemble mean with
standard error std/sqrt(n). Trajectories are independent, so the standard
error needs no correction for the time correlation inside a trajectory.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..errors import InsufficientDataError, InvalidParameterError, LowPowerWarning, TruncationWarning
from . import targets
from .accum import mean_and_se
from .estimate import CorrelationEstimate
from .psi import StationaryDriverEnsemble

MIN_TRAJ = 100


def _check_power(ens: StationaryDriverEnsemble, what: str):
    if ens.n_traj < 2:
        raise InsufficientDataError(f"{what} needs at least 2 trajectories")
    if ens.n_traj < MIN_TRAJ:
        warnings.warn(f"{what}: {ens.n_traj} trajectories (< {MIN_TRAJ}) give low power", LowPowerWarning, stacklevel=3)


def _lag_index(ens: StationaryDriverEnsemble, lag: float) -> int:
    h = ens.grid_step
    if lag < 0 or (h == 0 and lag > 0):
        raise InvalidParameterError(f"lag {lag} not available on the ensemble grid")
    j = 0 if lag == 0 else int(round(lag / h))
    if abs(j * h - lag) > 1e-9 * max(1.0, lag) or j >= ens.times.size:
        raise InvalidParameterError(f"lag {lag} must be a multiple of the grid step {h} within the horizon")
    return j


def autocov_psi(ens: StationaryDriverEnsemble, lags) -> list[CorrelationEstimate]:
    """Empirical E[psi(t) psi(t + s)^T] for each lag s; one estimate per lag."""
    _check_power(ens, "autocov_psi")
    m = ens.size
    out = []
    for lag in np.atleast_1d(np.asarray(lags, dtype=float)):
        j = _lag_index(ens, float(lag))
        G = ens.times.size
        a = ens.psi[:, : G - j]
        b = ens.psi[:, j:]
        per_traj = np.einsum("rgi,rgk->rik", a, b) / (G - j)
        mean, se, n = mean_and_se(per_traj)
        target = targets.diag(targets.psi_autocov(lag, ens.collision_rate, ens.dim), m)
        out.append(CorrelationEstimate(mean, se, n, target, "psi_autocov", label=f"lag={lag:g}", extra={"lag": float(lag)}))
    return out


def exp_decay_conditional(ens: StationaryDriverEnsemble, a, t: float) -> CorrelationEstimate:
    """Empirical E[psi(t) | psi(0) = a] against exp(-lambda t) a."""
    if ens.mode != "conditioned" or ens.initial is None:
        raise InvalidParameterError("exp_decay_conditional needs an ensemble started from psi(0) = a")
    a = np.asarray(a, dtype=float)
    if a.shape != ens.initial.shape or not np.array_equal(a, ens.initial):
        raise InvalidParameterError("conditioning vector differs from the one the ensemble was started from")
    _check_power(ens, "exp_decay_conditional")
    j = _lag_index(ens, float(t))
    mean, se, n = mean_and_se(ens.psi[:, j])
    target = targets.conditional_decay(t, ens.collision_rate) * a
    return CorrelationEstimate(mean, se, n, target, "conditional_decay", label=f"t={t:g}", extra={"t": float(t)})


def _v_lag_stats(V: np.ndarray, k: int) -> np.ndarray:
    """Per-trajectory mean over j of V_j V_{j+k}^T."""
    n_win = V.shape[1]
    return np.einsum("rji,rjk->rik", V[:, : n_win - k], V[:, k:]) / (n_win - k)


def v_correlations(ens: StationaryDriverEnsemble, k_max: int) -> list[CorrelationEstimate]:
    """Empirical E[V_0 V_k^T] for k = 0..k_max against the closed forms."""
    if ens.n_windows < k_max + 1:
        raise InvalidParameterError("horizon must cover k_max + 1 unit windows")
    _check_power(ens, "v_correlations")
    m = ens.size
    out = []
    for k in range(k_max + 1):
        mean, se, n = mean_and_se(_v_lag_stats(ens.V, k))
        target = targets.diag(targets.v_corr(k, ens.collision_rate, ens.dim), m)
        fid = "v_corr_0" if k == 0 else "v_corr_k"
        out.append(CorrelationEstimate(mean, se, n, target, fid, label=f"k={k}", extra={"k": k}))
    return out


def green_kubo_constants(ens: StationaryDriverEnsemble, k_max: int) -> dict[str, CorrelationEstimate]:
    """Truncated Green-Kubo sums for Sigma~, E~ and E, plus the Stratonovich gap E - Sigma~/2.

    Per trajectory: C(k) = mean_j V_j V_{j+k}^T, Sigma~ = C(0) + sum_k (C(k) + C(k)^T),
    E~ = sum_k C(k), E = E~ + mean_j int_j^{j+1} H_j (x) psi. Because every
    quantity is a per-trajectory statistic, the gap's standard error accounts
    for the correlation between its two terms.
    """
    lam, d, m = ens.collision_rate, ens.dim, ens.size
    if not math.exp(-lam * k_max) < 1e-6:
        raise InvalidParameterError(f"k_max={k_max} too small: need exp(-lambda k_max) < 1e-6")
    if ens.n_windows < k_max + 1:
        raise InvalidParameterError("horizon must cover k_max + 1 unit windows")
    _check_power(ens, "green_kubo_constants")
    C = [_v_lag_stats(ens.V, k) for k in range(k_max + 1)]
    e_tilde = sum(C[1:], np.zeros_like(C[0]))
    sigma = C[0] + e_tilde + np.swapaxes(e_tilde, 1, 2)
    h_term = ens.HX.mean(axis=1)
    e_total = e_tilde + h_term
    gap = e_total - 0.5 * sigma

    bound = math.exp(-lam * k_max)
    info = {"k_max": k_max, "tail_bound": bound, "last_term": float(np.max(np.abs(C[-1].mean(axis=0))))}

    def est(samples, target, fid, label):
        mean, se, n = mean_and_se(samples)
        return CorrelationEstimate(mean, se, n, targets.diag(target, m), fid, label=label, extra=dict(info))

    out = {
        "sigma_tilde": est(sigma, targets.sigma_tilde(lam, d), "sigma_tilde", "Sigma~"),
        "e_tilde": est(e_tilde, targets.e_tilde(lam, d), "e_tilde", "E~"),
        "h_correction": est(h_term, targets.h_correction(lam, d), "h_correction", "int H (x) psi"),
        "e_total": est(e_total, targets.e_total(lam, d), "e_total", "E"),
        "stratonovich_gap": est(gap, 0.0, "stratonovich_gap", "E - Sigma~/2"),
    }
    if targets.v_tail(k_max, lam, d) > 0.1 * float(np.min(np.diag(out["sigma_tilde"].std_error))):
        warnings.warn(
            f"Green-Kubo truncation: the k_max={k_max} term exceeds 10% of the standard error",
            TruncationWarning,
            stacklevel=2,
        )
    return out

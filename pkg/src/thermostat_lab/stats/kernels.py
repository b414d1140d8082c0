"""Exact lift of the frame driver on a grid.

Given starting frames ``phi0`` and a padded collision batch, compute at each
grid time ``psi(t)`` (stacked ``phi_k(t)^T nhat``), the integral
``X(t) = int_0^t psi`` and the anchored iterated integral
``A(t) = int_0^t X(r) (x) psi(r) dr``. Between events psi is constant, so
both integrals are exact up to rounding. Events win ties with grid times.
"""

from __future__ import annotations

import numpy as np

from .._backend import backend, njit, prange


@njit(cache=True)
def _lift_one(phi0, nhat, grid, ev_t, ev_k, ev_g, n_ev, psi_out, X_out, A_out):
    N = phi0.shape[0]
    d = phi0.shape[1]
    m = N * d
    G = grid.size
    phi = phi0.copy()
    psi = np.zeros(m)
    for k in range(N):
        for i in range(d):
            acc = 0.0
            for a in range(d):
                acc += phi[k, a, i] * nhat[a]
            psi[k * d + i] = acc
    X = np.zeros(m)
    A = np.zeros((m, m))
    col = np.empty(d)
    t = 0.0
    ie = 0
    ig = 0
    while ig < G:
        te = ev_t[ie] if ie < n_ev else np.inf
        tg = grid[ig]
        is_event = te <= tg
        target = te if is_event else tg
        L = target - t
        if L > 0.0:
            for i in range(m):
                Xi = X[i]
                for j in range(m):
                    A[i, j] += L * Xi * psi[j] + 0.5 * L * L * psi[i] * psi[j]
            for i in range(m):
                X[i] += L * psi[i]
            t = target
        if is_event:
            k = ev_k[ie]
            g = ev_g[ie]
            for b in range(d):
                for a in range(d):
                    acc = 0.0
                    for c in range(d):
                        acc += g[a, c] * phi[k, c, b]
                    col[a] = acc
                for a in range(d):
                    phi[k, a, b] = col[a]
            for i in range(d):
                acc = 0.0
                for a in range(d):
                    acc += phi[k, a, i] * nhat[a]
                psi[k * d + i] = acc
            ie += 1
        else:
            for i in range(m):
                psi_out[ig, i] = psi[i]
                X_out[ig, i] = X[i]
                for j in range(m):
                    A_out[ig, i, j] = A[i, j]
            ig += 1


@njit(cache=True, parallel=True)
def frame_lift_numba(phi0, nhat, grid, ev_t, ev_k, ev_g, ev_n):
    n, N, d, _ = phi0.shape
    m = N * d
    G = grid.size
    psi = np.empty((n, G, m))
    X = np.empty((n, G, m))
    A = np.empty((n, G, m, m))
    for r in prange(n):
        _lift_one(phi0[r], nhat, grid, ev_t[r], ev_k[r], ev_g[r], ev_n[r], psi[r], X[r], A[r])
    return psi, X, A


def frame_lift_numpy(phi0, nhat, grid, ev_t, ev_k, ev_g, ev_n):
    """Same result as :func:`frame_lift_numba`, vectorized across trajectories.

    Events are applied in lockstep by event index; knots are the event times
    and the grid values are read off by interpolating from the last knot.
    """
    n, N, d, _ = phi0.shape
    m = N * d
    E = ev_t.shape[1]
    rows = np.arange(n)
    t_end = grid[-1]
    # padding and events past the grid become zero-length knots at t_end
    live = (np.arange(E)[None, :] < ev_n[:, None]) & (ev_t <= t_end)

    phi = phi0.copy()
    states = np.empty((n, E + 1, m))
    states[:, 0] = np.einsum("rkai,a->rki", phi, nhat).reshape(n, m)
    for e in range(E):
        r = rows[live[:, e]]
        if r.size:
            k = ev_k[r, e]
            phi[r, k] = ev_g[r, e] @ phi[r, k]
        states[:, e + 1] = np.einsum("rkai,a->rki", phi, nhat).reshape(n, m)

    knots = np.concatenate([np.zeros((n, 1)), np.where(live, ev_t, t_end)], axis=1)
    lengths = np.diff(knots, axis=1)
    inc = lengths[:, :, None] * states[:, :E]
    Xk = np.concatenate([np.zeros((n, 1, m)), np.cumsum(inc, axis=1)], axis=1)
    dA = np.einsum("rei,rej->reij", Xk[:, :E], inc) + 0.5 * np.einsum("rei,rej->reij", inc, inc)
    Ak = np.concatenate([np.zeros((n, 1, m, m)), np.cumsum(dA, axis=1)], axis=1)

    # last knot at or before each grid time (events win ties)
    idx = np.empty((n, grid.size), dtype=np.int64)
    for r in range(n):
        idx[r] = np.searchsorted(knots[r, 1:], grid, side="right")

    def take(arr):
        return np.take_along_axis(arr, idx.reshape(n, -1, *([1] * (arr.ndim - 2))), axis=1)

    t0 = np.take_along_axis(knots, idx, axis=1)
    psi = take(states)
    X0 = take(Xk)
    A0 = take(Ak)
    delta = (grid[None, :] - t0)[:, :, None] * psi
    X = X0 + delta
    A = A0 + np.einsum("rgi,rgj->rgij", X0, delta) + 0.5 * np.einsum("rgi,rgj->rgij", delta, delta)
    return psi, X, A


def frame_lift(phi0, nhat, grid, ev_t, ev_k, ev_g, ev_n, which: str | None = None):
    which = which or backend()
    args = (
        np.ascontiguousarray(phi0, dtype=float),
        np.ascontiguousarray(nhat, dtype=float),
        np.ascontiguousarray(grid, dtype=float),
        ev_t, ev_k, ev_g, ev_n,
    )
    if which == "numba":
        return frame_lift_numba(*args)
    return frame_lift_numpy(*args)

"""Hot loops of the microscopic simulation.

Every kernel exists twice: ``*_numba`` (compiled, one trajectory per
``prange`` iteration) and ``*_numpy`` (vectorized across the ensemble). They
share the step rule: from the current breakpoint, take substeps of size ``h``
until the remaining distance is at most ``h * (1 + STEP_SLACK)``, then land on
the breakpoint exactly. Each substep is a classical RK4 step of the thermostat
vector field followed by radial projection onto the energy sphere.
"""

from __future__ import annotations

import math

import numpy as np

from .._backend import backend, njit, prange

STEP_SLACK = 1e-9


# ---------------------------------------------------------------- numba path


@njit(cache=True)
def _rhs(p, out, eps, nhat, U, N, d):
    s = 0.0
    for k in range(N):
        for i in range(d):
            s += nhat[i] * p[k * d + i]
    c = eps * s / U
    for k in range(N):
        for i in range(d):
            out[k * d + i] = eps * nhat[i] - c * p[k * d + i]


@njit(cache=True)
def _rk4_substep(p, dt, eps, nhat, U, N, d, k1, k2, k3, k4, tmp):
    m = N * d
    _rhs(p, k1, eps, nhat, U, N, d)
    for j in range(m):
        tmp[j] = p[j] + 0.5 * dt * k1[j]
    _rhs(tmp, k2, eps, nhat, U, N, d)
    for j in range(m):
        tmp[j] = p[j] + 0.5 * dt * k2[j]
    _rhs(tmp, k3, eps, nhat, U, N, d)
    for j in range(m):
        tmp[j] = p[j] + dt * k3[j]
    _rhs(tmp, k4, eps, nhat, U, N, d)
    sq = 0.0
    for j in range(m):
        p[j] = p[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        sq += p[j] * p[j]
    scale = math.sqrt(U / sq)
    sq = 0.0
    for j in range(m):
        p[j] *= scale
        sq += p[j] * p[j]
    return abs(sq - U) / U


@njit(cache=True)
def advance_numba(p, dt, h, eps, nhat, U, N, d):
    """Integrate ``p`` (in place) over a collision-free interval of length dt."""
    m = N * d
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    remaining = dt
    worst = 0.0
    while remaining > 0.0:
        if remaining <= h * (1.0 + STEP_SLACK):
            step = remaining
            remaining = 0.0
        else:
            step = h
            remaining -= h
        err = _rk4_substep(p, step, eps, nhat, U, N, d, k1, k2, k3, k4, tmp)
        if err > worst:
            worst = err
    return worst


@njit(cache=True)
def _simulate_one(
    p0, nhat, eps, U, h, N, d, grid, ev_t, ev_k, ev_g, n_ev,
    P, Uo, PhiG, knot_t, knot_phi, record_knots, jumps,
):
    m = N * d
    G = grid.size
    p = p0.copy()
    phi = np.zeros((N, d, d))
    psi = np.empty(m)
    for k in range(N):
        for i in range(d):
            phi[k, i, i] = 1.0
            psi[k * d + i] = nhat[i]
    Phi = np.zeros(m)
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    blk = np.empty(d)
    worst = 0.0

    t = grid[0]
    ie = 0
    ig = 0
    kp = 0
    while True:
        # next breakpoint; events win ties so grid samples are right-continuous
        te = ev_t[ie] if ie < n_ev else np.inf
        tg = grid[ig] if ig < G else np.inf
        if te == np.inf and tg == np.inf:
            break
        is_event = te <= tg
        target = te if is_event else tg
        remaining = target - t
        while remaining > 0.0:
            if remaining <= h * (1.0 + STEP_SLACK):
                step = remaining
                remaining = 0.0
            else:
                step = h
                remaining -= h
            err = _rk4_substep(p, step, eps, nhat, U, N, d, k1, k2, k3, k4, tmp)
            if err > worst:
                worst = err
        for j in range(m):
            Phi[j] += (target - t) * psi[j]
        t = target
        if is_event:
            k = ev_k[ie]
            g = ev_g[ie]
            # u_k before the collision
            for i in range(d):
                acc = 0.0
                for a in range(d):
                    acc += phi[k, a, i] * p[k * d + a]
                blk[i] = acc
            for a in range(d):
                acc = 0.0
                for b in range(d):
                    acc += g[a, b] * p[k * d + b]
                tmp[a] = acc
            for a in range(d):
                p[k * d + a] = tmp[a]
            for b in range(d):
                for a in range(d):
                    acc = 0.0
                    for c in range(d):
                        acc += g[a, c] * phi[k, c, b]
                    tmp[a] = acc
                for a in range(d):
                    phi[k, a, b] = tmp[a]
            jump = 0.0
            for i in range(d):
                acc = 0.0
                accn = 0.0
                for a in range(d):
                    acc += phi[k, a, i] * p[k * d + a]
                    accn += phi[k, a, i] * nhat[a]
                jump += (acc - blk[i]) ** 2
                psi[k * d + i] = accn
            jumps[ie] = math.sqrt(jump)
            ie += 1
        else:
            for j in range(m):
                P[ig, j] = p[j]
                PhiG[ig, j] = Phi[j]
            for kk in range(N):
                for i in range(d):
                    acc = 0.0
                    for a in range(d):
                        acc += phi[kk, a, i] * p[kk * d + a]
                    Uo[ig, kk * d + i] = acc
            ig += 1
        if record_knots:
            knot_t[kp] = t
            for j in range(m):
                knot_phi[kp, j] = Phi[j]
            kp += 1
    return worst, kp


@njit(cache=True, parallel=True)
def simulate_batch_numba(p0, nhat, eps, U, h, N, d, grid, ev_t, ev_k, ev_g, ev_n, record_knots):
    n, m = p0.shape
    G = grid.size
    emax = ev_t.shape[1]
    P = np.empty((n, G, m))
    Uo = np.empty((n, G, m))
    PhiG = np.empty((n, G, m))
    nk = G + emax if record_knots else 1
    knot_t = np.zeros((n, nk))
    knot_phi = np.zeros((n, nk, m))
    n_knots = np.zeros(n, dtype=np.int64)
    jumps = np.zeros((n, max(emax, 1)))
    energy_err = np.zeros(n)
    for r in prange(n):
        worst, kp = _simulate_one(
            p0[r], nhat, eps, U, h, N, d, grid, ev_t[r], ev_k[r], ev_g[r], ev_n[r],
            P[r], Uo[r], PhiG[r], knot_t[r], knot_phi[r], record_knots, jumps[r],
        )
        energy_err[r] = worst
        n_knots[r] = kp
    return P, Uo, PhiG, knot_t, knot_phi, n_knots, jumps, energy_err


# ---------------------------------------------------------------- numpy path


def _rhs_numpy(p, eps, nhat, U, N, d):
    n = p.shape[0]
    blocks = p.reshape(n, N, d)
    s = (blocks * nhat).sum(axis=(1, 2))
    return (eps * nhat - (eps * s / U)[:, None, None] * blocks).reshape(n, N * d)


def _rk4_substep_numpy(p, dt, eps, nhat, U, N, d):
    dt = dt[:, None]
    k1 = _rhs_numpy(p, eps, nhat, U, N, d)
    k2 = _rhs_numpy(p + 0.5 * dt * k1, eps, nhat, U, N, d)
    k3 = _rhs_numpy(p + 0.5 * dt * k2, eps, nhat, U, N, d)
    k4 = _rhs_numpy(p + dt * k3, eps, nhat, U, N, d)
    p = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    p = p * np.sqrt(U / (p * p).sum(axis=1))[:, None]
    err = np.abs((p * p).sum(axis=1) - U) / U
    return p, err


def advance_numpy(p, dt, h, eps, nhat, U, N, d):
    out = np.array(p, dtype=float)[None, :]
    remaining = float(dt)
    worst = 0.0
    while remaining > 0.0:
        if remaining <= h * (1.0 + STEP_SLACK):
            step, remaining = remaining, 0.0
        else:
            step = h
            remaining -= h
        out, err = _rk4_substep_numpy(out, np.array([step]), eps, nhat, U, N, d)
        worst = max(worst, float(err[0]))
    p[:] = out[0]
    return worst


def simulate_batch_numpy(p0, nhat, eps, U, h, N, d, grid, ev_t, ev_k, ev_g, ev_n, record_knots):
    n, m = p0.shape
    G = grid.size
    emax = ev_t.shape[1]
    rows = np.arange(n)
    P = np.empty((n, G, m))
    Uo = np.empty((n, G, m))
    PhiG = np.empty((n, G, m))
    nk = G + emax if record_knots else 1
    knot_t = np.zeros((n, nk))
    knot_phi = np.zeros((n, nk, m))
    n_knots = np.zeros(n, dtype=np.int64)
    jumps = np.zeros((n, max(emax, 1)))
    energy_err = np.zeros(n)

    p = p0.astype(float).copy()
    phi = np.broadcast_to(np.eye(d), (n, N, d, d)).copy()
    psi = np.tile(nhat, (n, N))
    Phi = np.zeros((n, m))
    t = np.full(n, grid[0], dtype=float)
    ie = np.zeros(n, dtype=np.int64)
    ig = np.zeros(n, dtype=np.int64)
    # padded event times so that exhausted rows read +inf
    ev_tp = np.concatenate([ev_t, np.full((n, 1), np.inf)], axis=1)
    ev_tp[np.arange(emax + 1)[None, :] >= ev_n[:, None]] = np.inf
    grid_p = np.append(grid, np.inf)

    def next_target(sel):
        te = ev_tp[sel, ie[sel]]
        tg = grid_p[ig[sel]]
        return np.minimum(te, tg), te <= tg

    target, is_event = next_target(rows)
    remaining = target - t
    active = np.isfinite(target)

    while active.any():
        moving = active & (remaining > 0.0)
        if moving.any():
            idx = np.nonzero(moving)[0]
            rem = remaining[idx]
            last = rem <= h * (1.0 + STEP_SLACK)
            step = np.where(last, rem, h)
            remaining[idx] = np.where(last, 0.0, rem - h)
            p[idx], err = _rk4_substep_numpy(p[idx], step, eps, nhat, U, N, d)
            energy_err[idx] = np.maximum(energy_err[idx], err)
            continue

        # every active row sits on its breakpoint
        idx = np.nonzero(active)[0]
        Phi[idx] += (target[idx] - t[idx])[:, None] * psi[idx]
        t[idx] = target[idx]

        ev_rows = idx[is_event[idx]]
        if ev_rows.size:
            j = ie[ev_rows]
            k = ev_k[ev_rows, j]
            g = ev_g[ev_rows, j]
            pb = p.reshape(n, N, d)
            u_before = np.einsum("rab,ra->rb", phi[ev_rows, k], pb[ev_rows, k])
            pb[ev_rows, k] = np.einsum("rab,rb->ra", g, pb[ev_rows, k])
            phi[ev_rows, k] = g @ phi[ev_rows, k]
            u_after = np.einsum("rab,ra->rb", phi[ev_rows, k], pb[ev_rows, k])
            jumps[ev_rows, j] = np.linalg.norm(u_after - u_before, axis=1)
            psi.reshape(n, N, d)[ev_rows, k] = np.einsum("rab,a->rb", phi[ev_rows, k], nhat)
            ie[ev_rows] += 1
        gr_rows = idx[~is_event[idx]]
        if gr_rows.size:
            j = ig[gr_rows]
            P[gr_rows, j] = p[gr_rows]
            PhiG[gr_rows, j] = Phi[gr_rows]
            pb = p.reshape(n, N, d)[gr_rows]
            Uo[gr_rows, j] = np.einsum("rkab,rka->rkb", phi[gr_rows], pb).reshape(-1, m)
            ig[gr_rows] += 1
        if record_knots:
            kp = n_knots[idx]
            knot_t[idx, kp] = t[idx]
            knot_phi[idx, kp] = Phi[idx]
            n_knots[idx] += 1

        target[idx], is_event[idx] = next_target(idx)
        remaining[idx] = target[idx] - t[idx]
        active[idx] = np.isfinite(target[idx])

    if not record_knots:
        n_knots[:] = 0
    return P, Uo, PhiG, knot_t, knot_phi, n_knots, jumps, energy_err


def simulate_batch(*args, which: str | None = None):
    which = which or backend()
    if which == "numba":
        return simulate_batch_numba(*args)
    return simulate_batch_numpy(*args)


def advance(p, dt, h, eps, nhat, U, N, d, which: str | None = None):
    which = which or backend()
    if which == "numba":
        return advance_numba(p, dt, h, eps, nhat, U, N, d)
    return advance_numpy(p, dt, h, eps, nhat, U, N, d)

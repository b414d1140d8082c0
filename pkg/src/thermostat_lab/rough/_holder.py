"""Pairwise suprema for Hölder seminorms (numba kernel and numpy fallback)."""

from __future__ import annotations

import math

import numpy as np

from .._backend import backend, njit


@njit(cache=True)
def _pair_terms(t, X, A, i, j, alpha):
    m = X.shape[1]
    dt = t[j] - t[i]
    s1 = 0.0
    s2 = 0.0
    for a in range(m):
        inc = X[j, a] - X[i, a]
        s1 += inc * inc
        for b in range(m):
            v = A[j, a, b] - A[i, a, b] - X[i, a] * (X[j, b] - X[i, b])
            s2 += v * v
    return math.sqrt(s1) / dt**alpha, math.sqrt(s2) / dt ** (2.0 * alpha)


@njit(cache=True)
def holder_all_pairs_numba(t, X, A, alpha):
    n = t.size
    best1 = 0.0
    best2 = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            if t[j] <= t[i]:
                continue
            r1, r2 = _pair_terms(t, X, A, i, j, alpha)
            if r1 > best1:
                best1 = r1
            if r2 > best2:
                best2 = r2
    return best1, best2


@njit(cache=True)
def holder_dyadic_numba(t, X, A, alpha):
    n = t.size
    best1 = 0.0
    best2 = 0.0
    gap = 1
    while gap < n:
        for i in range(n - gap):
            j = i + gap
            if t[j] <= t[i]:
                continue
            r1, r2 = _pair_terms(t, X, A, i, j, alpha)
            if r1 > best1:
                best1 = r1
            if r2 > best2:
                best2 = r2
        gap *= 2
    return best1, best2


def _rows_numpy(t, X, A, i, js, alpha):
    dt = t[js] - t[i]
    ok = dt > 0
    js, dt = js[ok], dt[ok]
    inc = X[js] - X[i]
    area = A[js] - A[i] - X[i][None, :, None] * inc[:, None, :]
    r1 = np.linalg.norm(inc, axis=1) / dt**alpha
    r2 = np.sqrt((area * area).sum(axis=(1, 2))) / dt ** (2 * alpha)
    return (r1.max() if r1.size else 0.0), (r2.max() if r2.size else 0.0)


def holder_all_pairs_numpy(t, X, A, alpha):
    best1 = best2 = 0.0
    for i in range(t.size - 1):
        r1, r2 = _rows_numpy(t, X, A, i, np.arange(i + 1, t.size), alpha)
        best1, best2 = max(best1, r1), max(best2, r2)
    return best1, best2


def holder_dyadic_numpy(t, X, A, alpha):
    n = t.size
    best1 = best2 = 0.0
    gap = 1
    while gap < n:
        i = np.arange(n - gap)
        j = i + gap
        dt = t[j] - t[i]
        ok = dt > 0
        i, j, dt = i[ok], j[ok], dt[ok]
        inc = X[j] - X[i]
        area = A[j] - A[i] - X[i][:, :, None] * inc[:, None, :]
        if dt.size:
            best1 = max(best1, float((np.linalg.norm(inc, axis=1) / dt**alpha).max()))
            best2 = max(best2, float((np.sqrt((area * area).sum(axis=(1, 2))) / dt ** (2 * alpha)).max()))
        gap *= 2
    return best1, best2


def holder_sup(t, X, A, alpha, dyadic: bool, which: str | None = None):
    which = which or backend()
    args = (np.ascontiguousarray(t), np.ascontiguousarray(X), np.ascontiguousarray(A), float(alpha))
    if which == "numba":
        fn = holder_dyadic_numba if dyadic else holder_all_pairs_numba
    else:
        fn = holder_dyadic_numpy if dyadic else holder_all_pairs_numpy
    r1, r2 = fn(*args)
    return float(r1), float(r2)

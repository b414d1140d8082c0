"""Closed-form reference values for the stationary driver.

Kept apart from the estimators so that no estimator can quietly reuse a
target. Every function is keyed by a formula id that ends up in reports.
"""

from __future__ import annotations

import math

import numpy as np


def diffusion_rate(lam: float, d: int) -> float:
    """delta = 2 / (lambda d), the variance rate of the limiting Brownian motion."""
    return 2.0 / (lam * d)


def psi_second_moment(d: int) -> float:
    return 1.0 / d


def psi_autocov(lag: float, lam: float, d: int) -> float:
    """Diagonal of E[psi(0) psi(lag)^T]; off-diagonal entries vanish."""
    return math.exp(-lam * abs(lag)) / d


def conditional_decay(t: float, lam: float) -> float:
    """E[psi(t) | psi(0) = a] = exp(-lambda t) a."""
    return math.exp(-lam * t)


def v_corr(k: int, lam: float, d: int) -> float:
    """Diagonal of E[V_0 V_k^T] for unit-window integrals V_j of psi."""
    if k < 0:
        raise ValueError("lag must be nonnegative")
    if k == 0:
        return 2.0 * (math.exp(-lam) + lam - 1.0) / (lam**2 * d)
    return math.expm1(lam) ** 2 * math.exp(-lam * (k + 1)) / (lam**2 * d)


def sigma_tilde(lam: float, d: int) -> float:
    return 2.0 / (lam * d)


def e_tilde(lam: float, d: int) -> float:
    return -math.expm1(-lam) / (lam**2 * d)


def h_correction(lam: float, d: int) -> float:
    """Diagonal of E int_0^1 H(r) (x) psi(r) dr with H(r) = int_0^r psi."""
    return (math.exp(-lam) + lam - 1.0) / (lam**2 * d)


def e_total(lam: float, d: int) -> float:
    return 1.0 / (lam * d)


def v_tail(k_max: int, lam: float, d: int) -> float:
    """Size of the last retained lag-correlation term."""
    return v_corr(k_max, lam, d)


FORMULAS = {
    "psi_second_moment": "1/d",
    "psi_autocov": "exp(-lambda*|s|)/d * I",
    "conditional_decay": "exp(-lambda*t) * a",
    "v_corr_0": "2*(exp(-lambda)+lambda-1)/(lambda^2*d) * I",
    "v_corr_k": "(exp(lambda)-1)^2*exp(-lambda*(k+1))/(lambda^2*d) * I",
    "sigma_tilde": "2/(lambda*d) * I",
    "e_tilde": "(1-exp(-lambda))/(lambda^2*d) * I",
    "h_correction": "(exp(-lambda)+lambda-1)/(lambda^2*d) * I",
    "e_total": "1/(lambda*d) * I",
    "stratonovich_gap": "E - Sigma_tilde/2 = 0",
    "sphere_second_moment": "U/(N*d) * I",
}


def diag(value: float, m: int) -> np.ndarray:
    return value * np.eye(m)

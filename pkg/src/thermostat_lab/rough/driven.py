"""Solution map of ``du = A(u) dW`` for piecewise-linear drivers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInitialConditionError, InvalidParameterError
from ..micro.kernels import STEP_SLACK


class SphereCoefficient:
    """``A(u) = I - u u^T / U``; A(u) xi is tangent to the sphere |u|^2 = U."""

    def __init__(self, U: float):
        if not U > 0:
            raise InvalidParameterError("U must be positive")
        self.U = float(U)

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.eye(u.size) - np.outer(u, u) / self.U

    def apply(self, u, xi) -> np.ndarray:
        return xi - u * (u @ xi) / self.U

    def project(self, u) -> np.ndarray:
        return u * np.sqrt(self.U / (u @ u))


@dataclass
class DrivenSolution:
    times: np.ndarray
    values: np.ndarray

    def at(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, t)
        idx = np.clip(idx, 0, self.times.size - 1)
        if np.any(np.abs(self.times[idx] - np.asarray(t)) > 1e-12 * max(1.0, float(np.max(np.abs(t))))):
            raise InvalidParameterError("requested time was not an output time of the solve")
        return self.values[idx]


def solve_driven_ode(A, W, u0, step: float, times=None, U: float | None = None) -> DrivenSolution:
    """Integrate ``du = A(u) dW`` along each linear piece of ``W``.

    Each piece of duration tau and increment D is traversed with RK4 substeps
    of size <= ``step`` (same greedy rule as the microscopic integrator) for
    the vector field ``A(u) D / tau``. With a :class:`SphereCoefficient`, every
    substep ends with radial projection and ``u0`` must lie on the sphere.

    ``times`` are extra output times, inserted as breakpoints.
    """
    if not step > 0:
        raise InvalidParameterError("step must be positive")
    u = np.array(u0, dtype=float)
    sphere = A if isinstance(A, SphereCoefficient) else None
    if sphere is None and U is not None:
        sphere = SphereCoefficient(U)
    if sphere is not None:
        if abs(u @ u - sphere.U) > 1e-10 * sphere.U:
            raise InvalidInitialConditionError("|u0|^2 must equal U")
        field = sphere.apply
    else:
        field = lambda x, xi: np.asarray(A(x)) @ xi  # noqa: E731

    knots = W.times
    if times is not None:
        knots = np.union1d(knots, np.asarray(times, dtype=float))
    values = W(knots)
    out = np.empty((knots.size, u.size))
    out[0] = u
    for n in range(knots.size - 1):
        tau = knots[n + 1] - knots[n]
        if tau <= 0:
            out[n + 1] = u
            continue
        slope = (values[n + 1] - values[n]) / tau
        remaining = tau
        while remaining > 0.0:
            if remaining <= step * (1.0 + STEP_SLACK):
                h, remaining = remaining, 0.0
            else:
                h = step
                remaining -= step
            k1 = field(u, slope)
            k2 = field(u + 0.5 * h * k1, slope)
            k3 = field(u + 0.5 * h * k2, slope)
            k4 = field(u + h * k3, slope)
            u = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if sphere is not None:
                u = sphere.project(u)
        out[n + 1] = u
    return DrivenSolution(knots, out)

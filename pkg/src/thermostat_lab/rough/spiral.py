"""Planar spiral driver: tends to zero uniformly while its area does not."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError
from ..micro.trajectory import DriverPath
from .lift import canonical_lift


def spiral_example(eps: float, segments: int) -> DriverPath:
    """Piecewise-linear interpolation of ``eps * (cos(t/eps^2), sin(t/eps^2))`` on [0, 1]."""
    if not eps > 0:
        raise InvalidParameterError("eps must be positive")
    if segments < 10:
        raise InvalidParameterError("segments must be >= 10")
    t = np.linspace(0.0, 1.0, segments + 1)
    phase = t / eps**2
    return DriverPath(t, eps * np.column_stack([np.cos(phase), np.sin(phase)]))


def spiral_targets(eps: float) -> dict:
    """Closed forms on [0, 1] for the smooth spiral."""
    return {
        "y2": 0.5 + eps**2 * np.sin(2.0 / eps**2) / 4.0,
        "area": 1.0 - eps**2 * np.sin(1.0 / eps**2),
        "sup_norm": eps,
    }


def spiral_response(path: DriverPath) -> dict:
    """Response of ``dy1 = dx1, dy2 = y1 dx2`` with ``y(0) = (x1(0), 0)``, read off the lift.

    ``y2(1) = int x1 dx2 = WW_12(0, 1) + x1(0) * (x2(1) - x2(0))``.
    """
    rp = canonical_lift(path, np.array([path.start, path.end]))
    x0 = path.values[0]
    inc = rp.W[-1]
    ww = rp.WW[-1]
    return {
        "y1": float(x0[0] + inc[0]),
        "y2": float(ww[0, 1] + x0[0] * inc[1]),
        "area": float(ww[0, 1] - ww[1, 0]),
        "sup_norm": float(np.linalg.norm(path.values, axis=1).max()),
    }

"""Two-sample Kolmogorov-Smirnov statistic with asymptotic critical values."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, LowPowerWarning

MIN_SAMPLE = 50


def ks_critical_coefficient(alpha: float) -> float:
    """c(alpha) = sqrt(-ln(alpha / 2) / 2): 1.358 at 5%, 1.628 at 1%."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0))


@dataclass(frozen=True)
class KsResult:
    statistic: float
    n: int
    m: int

    def critical(self, alpha: float) -> float:
        return ks_critical_coefficient(alpha) * math.sqrt((self.n + self.m) / (self.n * self.m))

    @property
    def crit_05(self) -> float:
        return self.critical(0.05)

    @property
    def crit_01(self) -> float:
        return self.critical(0.01)

    def rejects(self, alpha: float) -> bool:
        return self.statistic > self.critical(alpha)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "n": self.n,
            "m": self.m,
            "critical_0.05": self.crit_05,
            "critical_0.01": self.crit_01,
            "reject_0.05": self.rejects(0.05),
            "reject_0.01": self.rejects(0.01),
        }


def ks_two_sample(a, b) -> KsResult:
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise InsufficientDataError("KS test needs two nonempty samples")
    if min(a.size, b.size) < MIN_SAMPLE:
        warnings.warn(f"KS asymptotics are unreliable below {MIN_SAMPLE} points", LowPowerWarning, stacklevel=2)
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return KsResult(float(np.max(np.abs(cdf_a - cdf_b))), a.size, b.size)

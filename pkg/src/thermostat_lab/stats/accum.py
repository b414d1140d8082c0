"""Mergeable running moments (count, mean, M2)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class MomentAccumulator:
    """Elementwise mean and sum of squared deviations over samples of a fixed shape.

    ``merge`` uses the pairwise update of Chan, Golub and LeVeque, so merging
    accumulators of disjoint sub-ensembles equals a single pass over the union.
    """

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def empty(cls, shape=()) -> "MomentAccumulator":
        return cls(0, np.zeros(shape), np.zeros(shape))

    @classmethod
    def from_samples(cls, x) -> "MomentAccumulator":
        x = np.asarray(x, dtype=float)
        if x.shape[0] == 0:
            return cls.empty(x.shape[1:])
        mean = x.mean(axis=0)
        return cls(x.shape[0], mean, ((x - mean) ** 2).sum(axis=0))

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.count == 0:
            return MomentAccumulator(self.count, self.mean.copy(), self.m2.copy())
        if self.count == 0:
            return MomentAccumulator(other.count, other.mean.copy(), other.m2.copy())
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return MomentAccumulator(n, mean, m2)

    def __add__(self, other):
        return self.merge(other)

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return self.m2 / (self.count - 1)

    @property
    def std_error(self) -> np.ndarray:
        return np.sqrt(self.variance / self.count)


def mean_and_se(x) -> tuple[np.ndarray, np.ndarray, int]:
    acc = MomentAccumulator.from_samples(x)
    return acc.mean, acc.std_error, acc.count


def combined_se(*ses) -> np.ndarray:
    return np.sqrt(sum(np.asarray(s) ** 2 for s in ses))


def sample_se(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(x.size))

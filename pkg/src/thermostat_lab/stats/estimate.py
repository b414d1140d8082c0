from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CorrelationEstimate:
    """An estimate with its Monte Carlo standard error and closed-form target.

    ``atol`` absorbs rounding when an entry is zero by construction and its
    standard error is itself at rounding level.
    """

    estimate: np.ndarray
    std_error: np.ndarray
    sample_count: int
    target: np.ndarray
    formula_id: str
    label: str = ""
    extra: dict = field(default_factory=dict)
    atol: float = 1e-12

    def __post_init__(self):
        self.estimate = np.asarray(self.estimate, dtype=float)
        self.std_error = np.asarray(self.std_error, dtype=float)
        self.target = np.broadcast_to(np.asarray(self.target, dtype=float), self.estimate.shape).copy()

    def z_scores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (self.estimate - self.target) / self.std_error
        return np.where(self.std_error > 0, z, np.where(self.estimate == self.target, 0.0, np.inf))

    def within(self, n_se: float = 3.0) -> np.ndarray:
        return np.abs(self.estimate - self.target) <= n_se * self.std_error + self.atol

    def passes(self, n_se: float = 3.0) -> bool:
        return bool(np.all(self.within(n_se)))

    def to_dict(self, n_se: float = 3.0, seed_range=None) -> dict:
        out = {
            "label": self.label,
            "formula": self.formula_id,
            "value": self.estimate.tolist(),
            "std_error": self.std_error.tolist(),
            "target": self.target.tolist(),
            "sample_count": self.sample_count,
            "band_se": n_se,
            "pass": self.passes(n_se),
            "max_abs_z": float(np.max(np.abs(np.nan_to_num(self.z_scores(), posinf=1e308)))),
        }
        if seed_range is not None:
            out["seed_range"] = list(seed_range)
        out.update(self.extra)
        return out

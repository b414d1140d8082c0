"""Run manifests and experiment configuration."""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import InvalidParameterError
from .io import sha256, write_json


@dataclass
class ExperimentConfig:
    """What to run and where; paths are resolved on construction."""

    experiment: str
    params: object
    ensemble_size: int
    seed: int
    out_dir: Path | None = None
    eps_schedule: tuple = ()
    threads: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise InvalidParameterError("ensemble size must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParameterError("seed must fit in an unsigned 64-bit integer")
        eps = tuple(float(e) for e in self.eps_schedule)
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise InvalidParameterError("eps schedule must be strictly decreasing")
        self.eps_schedule = eps
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir).resolve()

    def to_dict(self) -> dict:
        params = self.params.to_dict() if hasattr(self.params, "to_dict") else self.params
        return {
            "experiment": self.experiment,
            "params": params,
            "ensemble_size": self.ensemble_size,
            "seed": int(self.seed),
            "out_dir": None if self.out_dir is None else str(self.out_dir),
            "eps_schedule": list(self.eps_schedule),
            "threads": self.threads,
            "extra": self.extra,
        }


@dataclass
class RunManifest:
    config: dict
    version: str = __version__
    started: float = field(default_factory=time.time)
    elapsed: float = 0.0
    outputs: dict = field(default_factory=dict)

    def finish(self, files) -> "RunManifest":
        self.elapsed = time.time() - self.started
        self.outputs = {Path(f).name: sha256(f) for f in files if Path(f).exists()}
        return self

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "software": {
                "thermostat_lab": self.version,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "started_unix": self.started,
            "wall_clock_seconds": self.elapsed,
            "outputs_sha256": self.outputs,
        }

    def write(self, path) -> Path:
        return write_json(path, self.to_dict())

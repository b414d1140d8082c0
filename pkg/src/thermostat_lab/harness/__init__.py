"""Command-line orchestration, file formats and run manifests."""

from .io import CsvParseError, OutputSet, read_driver, read_table, write_json, write_table
from .manifest import ExperimentConfig, RunManifest

__all__ = [
    "CsvParseError",
    "ExperimentConfig",
    "OutputSet",
    "RunManifest",
    "read_driver",
    "read_table",
    "write_json",
    "write_table",
]

"""CSV and JSON input/output with deterministic formatting."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from ..errors import ThermostatLabError

FLOAT_FMT = "%.17g"


class CsvParseError(ThermostatLabError):
    """Malformed CSV input; the message names the offending line."""


def _fmt(x) -> str:
    return FLOAT_FMT % x


def write_table(path, header: list[str], rows) -> Path:
    """Write a numeric table; every float is printed with 17 significant digits."""
    path = Path(path)
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.size and rows.shape[1] != len(header):
        raise ValueError("row width does not match header")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def write_records(path, records: list[dict], columns: list[str] | None = None) -> Path:
    """Write mixed-type rows (strings and numbers) for report tables."""
    path = Path(path)
    columns = columns or (list(records[0]) if records else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in records:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in (r.get(c, "") for c in columns)])
    return path


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a header row."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CsvParseError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: line 1: empty file") from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise CsvParseError(f"{path}: line 1: malformed header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(f"{path}: line {lineno}: expected {len(header)} fields, found {len(row)}")
            try:
                values = [float(x) for x in row]
            except ValueError:
                raise CsvParseError(f"{path}: line {lineno}: non-numeric field") from None
            if not all(math.isfinite(v) for v in values):
                raise CsvParseError(f"{path}: line {lineno}: non-finite value")
            rows.append(values)
    if not rows:
        raise CsvParseError(f"{path}: no data rows")
    return header, np.array(rows)


def columns(prefix: str, n: int) -> list[str]:
    return [f"{prefix}_{i}" for i in range(1, n + 1)]


def matrix_columns(prefix: str, m: int) -> list[str]:
    return [f"{prefix}_{i}_{j}" for i in range(1, m + 1) for j in range(1, m + 1)]


def write_trajectory(path, traj) -> Path:
    m = traj.params.size
    header = ["t"] + columns("p", m) + columns("u", m) + columns("Phi", m)
    rows = np.column_stack([traj.times, traj.p, traj.u, traj.Phi])
    return write_table(path, header, rows)


def write_driver(path, driver) -> Path:
    header = ["t"] + columns("Phi", driver.dim)
    return write_table(path, header, np.column_stack([driver.times, driver.values]))


def read_driver(path):
    """Read the ``t, Phi_*`` columns of a driver or trajectory CSV as a DriverPath."""
    from ..micro.trajectory import DriverPath

    header, data = read_table(path)
    if header[0] != "t":
        raise CsvParseError(f"{path}: line 1: first column must be 't'")
    phi = [i for i, h in enumerate(header) if h.startswith("Phi_")]
    if not phi:
        raise CsvParseError(f"{path}: line 1: no Phi_* columns")
    t = data[:, 0]
    bad = np.flatnonzero(np.diff(t) < 0)
    if bad.size:
        raise CsvParseError(f"{path}: line {int(bad[0]) + 3}: time decreases")
    return DriverPath(t, data[:, phi])


def write_lift(path, rp) -> Path:
    m = rp.dim
    header = ["t"] + columns("W", m) + matrix_columns("WW", m)
    rows = np.column_stack([rp.times, rp.W, rp.WW.reshape(rp.times.size, m * m)])
    return write_table(path, header, rows)


def write_paths(path, sample) -> Path:
    """Long format: one row per (path, time)."""
    n, G, s = sample.values.shape
    header = ["path", "t"] + columns("x", s)
    idx = np.repeat(np.arange(sample.start, sample.start + n), G)
    t = np.tile(sample.times, n)
    return write_table(path, header, np.column_stack([idx, t, sample.values.reshape(n * G, s)]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class OutputSet:
    """Tracks files written by one command and removes them if it fails."""

    def __init__(self, directory):
        self.directory = Path(directory).resolve()
        self.files: list[Path] = []
        self._created_dir = False

    def __enter__(self):
        if not self.directory.exists():
            self.directory.mkdir(parents=True)
            self._created_dir = True
        elif not self.directory.is_dir():
            raise NotADirectoryError(f"{self.directory} exists and is not a directory")
        return self

    def path(self, name: str) -> Path:
        p = self.directory / name
        self.files.append(p)
        return p

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for f in self.files:
                try:
                    f.unlink()
                except FileNotFoundError:
                    pass
            if self._created_dir:
                try:
                    os.rmdir(self.directory)
                except OSError:
                    pass
        return False

"""Kernel backend selection.

Hot loops have two implementations: a numba ``@njit`` kernel and a
pure-numpy fallback. ``THERMOSTAT_LAB_BACKEND`` picks one (``numba`` or
``numpy``); the default is numba whenever it imports. Both follow the same
step rule, so they agree to rounding.
"""

from __future__ import annotations

import os

try:
    import numba

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skips probing an outdated TBB, which only emits a warning
        numba.config.THREADING_LAYER = "workqueue"
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

BACKEND_ENV = "THERMOSTAT_LAB_BACKEND"
THREADS_ENV = "THERMOSTAT_LAB_THREADS"


def backend() -> str:
    requested = os.environ.get(BACKEND_ENV, "").strip().lower()
    if requested == "numpy":
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    return "numba" if HAVE_NUMBA else "numpy"


def thread_budget(default: int | None = None) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        n = int(raw)
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer")
        return n
    if default is not None:
        return default
    return os.cpu_count() or 1


def set_threads(n: int) -> None:
    if HAVE_NUMBA:
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


if HAVE_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range

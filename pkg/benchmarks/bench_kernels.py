"""Time the numba kernels against their numpy fallbacks on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Prints one line per kernel with the best-of-N wall time for each backend, the
speedup, and the largest absolute difference between the two outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from thermostat_lab.micro import ModelParams, sample_collision_schedule
from thermostat_lab.micro import kernels as micro_kernels
from thermostat_lab.micro.trajectory import _pad
from thermostat_lab.rng import RngStream
from thermostat_lab.rough._holder import holder_sup
from thermostat_lab.stats.kernels import frame_lift
from thermostat_lab.stats.psi import batch_inputs


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_diff(a, b):
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    finite = np.isfinite(a) & np.isfinite(b)
    return float(np.max(np.abs(a[finite] - b[finite]))) if finite.any() else 0.0


def micro_case(n_traj):
    p = ModelParams(2, 2, 1.0, 0.1, 2.0, 100.0, ode_step=0.1, grid_points=101)
    schedules = [sample_collision_schedule(p, RngStream(1, i).generator()) for i in range(n_traj)]
    ev = _pad(schedules, p.dim)
    args = (np.tile(p.p0(), (n_traj, 1)), p.nhat, 0.1, 2.0, 0.1, 2, 2, p.grid(), *ev, False)

    def run(which):
        return micro_kernels.simulate_batch(*args, which=which)[:3]

    return f"micro ensemble ({n_traj} traj, t=100)", run


def lift_case(n_traj):
    p = ModelParams(2, 2, 1.0, 0.0, 2.0, 1.0)
    grid = np.linspace(0.0, 30.0, 61)
    inputs = batch_inputs(2, 2, 1.0, p.nhat, 30.0, 3, 0, n_traj, "haar")

    def run(which):
        return frame_lift(inputs[0], p.nhat, grid, *inputs[1:], which=which)

    return f"frame lift ({n_traj} traj, horizon 30)", run


def holder_case(n_points):
    gen = np.random.default_rng(5)
    t = np.linspace(0.0, 1.0, n_points)
    X = np.cumsum(gen.standard_normal((n_points, 4)), axis=0) / np.sqrt(n_points)
    A = np.cumsum(gen.standard_normal((n_points, 4, 4)), axis=0) / n_points

    def run(which):
        return holder_sup(t, X, A, 0.4, False, which)

    return f"Hoelder all pairs ({n_points} points)", run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes, for smoke runs")
    a = ap.parse_args(argv)
    sizes = (50, 200, 300) if a.quick else (2000, 5000, 2000)
    cases = [micro_case(sizes[0]), lift_case(sizes[1]), holder_case(sizes[2])]
    print(f"{'kernel':42s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, run in cases:
        run("numba")  # compile outside the timing
        tn, on = best_of(lambda: run("numba"), a.repeat)
        tp, op = best_of(lambda: run("numpy"), a.repeat)
        print(f"{name:42s} {tn:9.4f} {tp:9.4f} {tp / tn:8.1f} {max_diff(on, op):11.2e}")


if __name__ == "__main__":
    main()

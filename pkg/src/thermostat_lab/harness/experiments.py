"""Verification experiments behind ``thermostat-lab verify``.

Each runner returns a verdict dict ``{"checks": [...], "pass": bool, ...}``;
every check carries its estimate, target, standard error and pass flag.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..errors import LowPowerWarning, TruncationWarning
from ..micro.params import ModelParams
from ..sde.solvers import ou_projection_experiment
from ..stats import (
    autocov_psi,
    driver_increments,
    exp_decay_conditional,
    geometric_gaps,
    green_kubo_constants,
    moment_scaling_fit,
    simulate_stationary_psi,
    stationary_law_check,
    v_correlations,
    weak_convergence_study,
)

BAND = 3.0


def _estimate_check(name, est, seed_range) -> dict:
    d = est.to_dict(BAND, seed_range)
    d["check"] = name
    return d


def _capture(fn, *args, **kwargs):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = fn(*args, **kwargs)
    notes = [
        str(w.message) for w in caught if issubclass(w.category, (LowPowerWarning, TruncationWarning))
    ]
    return result, notes


def _verdict(kind, checks, notes, **info) -> dict:
    return {
        "experiment": kind,
        "checks": checks,
        "warnings": notes,
        "pass": all(c["pass"] for c in checks),
        **info,
    }


def run_autocov(p: ModelParams, paths, seed, horizon=10.0, lags=(0.0, 1.0), grid_step=0.5):
    ens, notes = _capture(simulate_stationary_psi, p, horizon, seed, n_traj=paths, grid_step=grid_step)
    est, more = _capture(autocov_psi, ens, list(lags))
    checks = [_estimate_check(f"autocov {e.label}", e, ens.seed_range()) for e in est]
    mean_psi = ens.psi.mean(axis=(1,))
    return _verdict("autocov", checks, notes + more, seed=seed, paths=paths, horizon=horizon,
                    mean_psi=mean_psi.mean(axis=0).tolist())


def run_decay(p: ModelParams, paths, seed, t=1.0, horizon=2.0):
    a = np.tile(p.nhat, p.n_particles)
    ens, notes = _capture(simulate_stationary_psi, p, horizon, seed, n_traj=paths, grid_step=t, mode="conditioned", initial=a)
    est, more = _capture(exp_decay_conditional, ens, a, t)
    return _verdict("decay", [_estimate_check(f"conditional mean {est.label}", est, ens.seed_range())], notes + more,
                    seed=seed, paths=paths)


def run_vcorr(p: ModelParams, paths, seed, k_max=2, horizon=None):
    horizon = horizon or float(k_max + 16)
    ens, notes = _capture(simulate_stationary_psi, p, horizon, seed, n_traj=paths, grid_step=1.0)
    est, more = _capture(v_correlations, ens, k_max)
    checks = [_estimate_check(f"V correlation {e.label}", e, ens.seed_range()) for e in est]
    return _verdict("vcorr", checks, notes + more, seed=seed, paths=paths, horizon=horizon)


def run_greenkubo(p: ModelParams, paths, seed, k_max=14, horizon=30.0):
    ens, notes = _capture(simulate_stationary_psi, p, horizon, seed, n_traj=paths, grid_step=1.0)
    gk, more = _capture(green_kubo_constants, ens, k_max)
    checks = [_estimate_check(k, e, ens.seed_range()) for k, e in gk.items()]
    c0 = v_correlations(ens, 0)[0].estimate
    s, et = gk["sigma_tilde"].estimate, gk["e_tilde"].estimate
    identity = float(np.max(np.abs(s - c0 - et - et.T)))
    return _verdict("greenkubo", checks, notes + more, seed=seed, paths=paths, horizon=horizon, k_max=k_max,
                    tail_bound=math.exp(-p.collision_rate * k_max), identity_residual=identity)


def run_momentfit(p: ModelParams, paths, seed, eps_list=(0.1, 0.05), q=4.0, base=0.1, n_gaps=8, horizon=20.0):
    gaps = geometric_gaps(base, n_gaps)
    fits = {}
    checks = []
    bands = {1: (0.45, 0.55), 2: (0.9, 1.1)}
    for eps in eps_list:
        inc = driver_increments(p, eps, gaps, horizon, paths, seed)
        for level in (1, 2):
            f = moment_scaling_fit(inc, q, level)
            fits[(eps, level)] = f
            lo, hi = bands[level]
            checks.append({
                "check": f"level {level} slope eps={eps:g}",
                "value": f.slope,
                "target": [lo, hi],
                "pass": lo <= f.slope <= hi,
                "fit": f.to_dict(),
            })
    for level in (1, 2):
        slopes = [fits[(e, level)].slope for e in eps_list]
        spread = max(slopes) - min(slopes)
        checks.append({
            "check": f"level {level} slope stability",
            "value": spread,
            "target": "< 0.05",
            "pass": spread < 0.05,
        })
    return _verdict("momentfit", checks, [], seed=seed, paths=paths, q=q, horizon=horizon)


def run_converge(p: ModelParams, paths, seed, eps_list=(0.4, 0.2, 0.1), times=(1.0,), alpha=0.05, sde_step=2e-3):
    report, notes = _capture(weak_convergence_study, eps_list, p, times, paths, seed, sde_step=sde_step)
    checks = []
    for v in report.verdicts(alpha):
        if v["observable"] != "v" or v["coordinate"] != 0:
            continue
        checks.append({"check": f"KS decreasing in eps, v_1 at t={v['t']:g}", "value": v["ks_by_eps"], "pass": v["monotone"]})
        checks.append({"check": f"KS below {alpha:g} critical value at smallest eps, v_1 at t={v['t']:g}",
                       "value": v["ks_by_eps"][-1][1] if v["ks_by_eps"] else None, "pass": v["final_pass"]})
    if report.omitted:
        notes.append(f"omitted: {report.omitted}")
    return _verdict("converge", checks, notes, report=report.to_dict(), seed=seed, paths=paths)


def run_stationary(p: ModelParams, paths, seed, micro_eps=0.2, micro_time=10.0):
    rep, notes = _capture(stationary_law_check, p, paths, seed, micro_eps=micro_eps, micro_time=micro_time)
    checks = [_estimate_check("sphere second moment", rep.second_moment, (0, paths))]
    for r in rep.ks_rows:
        checks.append({"check": f"micro speed {r['coordinate'] + 1} vs uniform sphere", "value": r["statistic"],
                       "target": r["critical_0.05"], "pass": r["statistic"] < r["critical_0.05"]})
    return _verdict("stationary", checks, notes, seed=seed, paths=paths)


def run_ou_limit(paths, seed, n=256, n_ref=64, t_final=10.0, step=0.01):
    big = ou_projection_experiment(n, t_final, paths, seed, step=step)
    small = ou_projection_experiment(n_ref, t_final, paths, seed, step=step)
    ratio = small["mean_sup_deviation"] / big["mean_sup_deviation"]
    ks = big["ks"]
    m2, se = big["u1_second_moment"], big["u1_second_moment_se"]
    checks = [
        {"check": f"KS u1({t_final:g}) vs OU, n={n}", "value": ks["statistic"], "target": ks["critical_0.01"],
         "pass": not ks["reject_0.01"]},
        {"check": f"sup-deviation ratio n={n_ref} / n={n}", "value": ratio, "target": [1.6, 2.5],
         "pass": 1.6 <= ratio <= 2.5},
        {"check": "stationary variance", "value": m2, "std_error": se, "target": 1.0,
         "pass": abs(m2 - 1.0) <= BAND * se},
    ]
    return _verdict("ou-limit", checks, [], runs={str(n): big, str(n_ref): small}, seed=seed, paths=paths)

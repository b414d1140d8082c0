"""Command-line interface: ``thermostat-lab simulate | lift | sde | verify``.

Exit codes: 0 success (verify: every check passed), 1 usage error or invalid
parameters, 2 runtime error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from .._backend import set_threads, thread_budget
from ..errors import StepSizeError, ThermostatLabError
from ..micro.params import ModelParams
from ..micro.trajectory import rescale_driver, simulate_trajectory
from ..rng import RngStream
from ..rough.lift import canonical_lift, chen_defect, holder_norms
from ..rough.spiral import spiral_example, spiral_response, spiral_targets
from ..sde.solvers import SdeConfig, ito_speed_solve, ou_paths, strat_sphere_solve
from . import experiments
from .io import CsvParseError, OutputSet, read_driver, write_driver, write_json, write_lift, write_paths, write_records, write_trajectory
from .manifest import ExperimentConfig, RunManifest

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_FAIL = 0, 1, 2, 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _model_flags(p, required=True):
    p.add_argument("--n-particles", type=int, required=required, default=2)
    p.add_argument("--dim", type=int, required=required, default=2)
    p.add_argument("--lambda", dest="lam", type=float, required=required, default=1.0)
    p.add_argument("--energy", type=float, required=required, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermostat-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="thread budget (default: THERMOSTAT_LAB_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate trajectories of the particle system")
    _model_flags(s)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--t-final", type=float, required=True)
    s.add_argument("--ode-step", type=float, required=True)
    s.add_argument("--grid-points", type=int, required=True)
    s.add_argument("--trajectories", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--field-direction", type=_floats, default=None)

    li = sub.add_parser("lift", help="lift a driver path and report Hoelder norms")
    src = li.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="trajectory or driver CSV (columns t, Phi_*)")
    src.add_argument("--builtin", choices=["spiral"])
    li.add_argument("--epsilon", type=float, required=True)
    li.add_argument("--alpha", type=float, default=0.4)
    li.add_argument("--grid-points", type=int, default=101)
    li.add_argument("--t-max", type=float, default=None, help="macroscopic horizon (default: as far as the input reaches, at most 1)")
    li.add_argument("--segments", type=int, default=10**6, help="segments of the built-in spiral")
    li.add_argument("--seed", type=int, default=0, help="seed for the random Chen triples")
    li.add_argument("--out", type=Path, required=True)

    sd = sub.add_parser("sde", help="sample a limiting diffusion")
    sd.add_argument("--model", choices=["ito-speed", "strat-sphere", "ou"], required=True)
    _model_flags(sd, required=False)
    sd.add_argument("--step", type=float, default=1e-3)
    sd.add_argument("--t-final", type=float, default=1.0)
    sd.add_argument("--grid-points", type=int, default=2)
    sd.add_argument("--initial", type=_floats, default=None)
    sd.add_argument("--variance-rate", type=float, default=None)
    sd.add_argument("--paths", type=int, required=True)
    sd.add_argument("--seed", type=int, required=True)
    sd.add_argument("--out", type=Path, required=True)

    v = sub.add_parser("verify", help="run a statistical verification and emit a verdict")
    v.add_argument("check", choices=["autocov", "decay", "vcorr", "greenkubo", "momentfit", "converge", "stationary", "ou-limit"])
    _model_flags(v, required=False)
    v.add_argument("--paths", type=int, default=10_000)
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--horizon", type=float, default=None)
    v.add_argument("--k-max", type=int, default=None)
    v.add_argument("--epsilons", type=_floats, default=None, help="comma-separated, strictly decreasing")
    v.add_argument("--times", type=_floats, default=None)
    v.add_argument("--n", type=int, default=256, help="dimension for ou-limit")
    v.add_argument("--out", type=Path, default=None, help="directory for verdict.json and table.csv")
    return parser


def _manifest(cfg: ExperimentConfig, outputs: OutputSet, extra_files=()) -> Path:
    path = outputs.path("manifest.json")
    RunManifest(cfg.to_dict()).finish([f for f in outputs.files if f != path] + list(extra_files)).write(path)
    return path


def cmd_simulate(a) -> int:
    params = ModelParams(
        n_particles=a.n_particles, dim=a.dim, collision_rate=a.lam, field_strength=a.epsilon,
        total_energy=a.energy, t_final=a.t_final, ode_step=a.ode_step, grid_points=a.grid_points,
        field_direction=None if a.field_direction is None else tuple(a.field_direction),
    )
    if a.trajectories < 1:
        raise UsageError("--trajectories must be >= 1")
    cfg = ExperimentConfig("simulate", params, a.trajectories, a.seed, a.out, threads=a.threads)
    width = max(5, len(str(a.trajectories - 1)))
    with OutputSet(cfg.out_dir) as out:
        for i in range(a.trajectories):
            traj = simulate_trajectory(params, RngStream(a.seed, i))
            write_trajectory(out.path(f"traj_{i:0{width}d}.csv"), traj)
            write_driver(out.path(f"driver_{i:0{width}d}.csv"), traj.driver)
            write_json(out.path(f"traj_{i:0{width}d}.json"), {
                "params": params.to_dict(),
                "seed": a.seed,
                "stream_index": i,
                "event_count": len(traj.schedule),
                "energy_error": traj.energy_error,
                "max_u_jump": float(traj.jumps.max()) if traj.jumps.size else 0.0,
            })
        _manifest(cfg, out)
    return EXIT_OK


def _chen_max(rp, n_triples: int, seed: int) -> float:
    gen = RngStream(seed).generator()
    M = rp.times.size
    worst = 0.0
    scale = max(rp.scale(), 1e-300)
    for _ in range(n_triples):
        i, k, j = np.sort(gen.integers(0, M, 3))
        worst = max(worst, float(np.abs(chen_defect(rp, rp.times[i], rp.times[k], rp.times[j])).max()) / scale)
    return worst


def cmd_lift(a) -> int:
    if not 1.0 / 3.0 < a.alpha < 0.5:
        raise UsageError("--alpha must lie in (1/3, 1/2)")
    if a.grid_points < 2:
        raise UsageError("--grid-points must be >= 2")
    report: dict = {"epsilon": a.epsilon, "alpha": a.alpha}
    if a.builtin == "spiral":
        path = spiral_example(a.epsilon, a.segments)
        report["builtin"] = "spiral"
        report["segments"] = a.segments
        report["response"] = spiral_response(path)
        report["targets"] = spiral_targets(a.epsilon)
        t_max = 1.0 if a.t_max is None else a.t_max
    else:
        raw = read_driver(a.input)
        report["input"] = str(Path(a.input).resolve())
        if not a.epsilon > 0:
            raise UsageError("--epsilon must be positive")
        reach = raw.end * a.epsilon**2
        t_max = min(1.0, reach) if a.t_max is None else a.t_max
        path = rescale_driver(raw, a.epsilon, t_max)
    grid = np.linspace(path.start, min(path.end, t_max), a.grid_points)
    rp = canonical_lift(path, grid)
    hr = holder_norms(rp, a.alpha)
    report["holder"] = hr.to_dict()
    report["chen_max_relative_defect"] = _chen_max(rp, 100, a.seed)
    cfg = ExperimentConfig("lift", {"epsilon": a.epsilon, "alpha": a.alpha, "grid_points": a.grid_points,
                                    "t_max": t_max, "input": report.get("input"), "builtin": a.builtin},
                           1, a.seed, a.out, threads=a.threads)
    with OutputSet(cfg.out_dir) as out:
        write_lift(out.path("lift.csv"), rp)
        write_json(out.path("lift_report.json"), report)
        _manifest(cfg, out)
    return EXIT_OK


def cmd_sde(a) -> int:
    cfg_kwargs = dict(step=a.step, t_final=a.t_final, grid_points=a.grid_points, variance_rate=a.variance_rate,
                      initial_state=None if a.initial is None else tuple(a.initial))
    sde = SdeConfig(a.model, a.n_particles, a.dim, a.lam, a.energy, **cfg_kwargs)
    if a.paths < 1:
        raise UsageError("--paths must be >= 1")
    solver = {"ito-speed": ito_speed_solve, "strat-sphere": strat_sphere_solve, "ou": ou_paths}[a.model]
    sample = solver(sde, a.seed, a.paths)
    cfg = ExperimentConfig("sde", sde, a.paths, a.seed, a.out, threads=a.threads,
                           extra={"rejections": sample.rejections})
    with OutputSet(cfg.out_dir) as out:
        write_paths(out.path("paths.csv"), sample)
        _manifest(cfg, out)
    return EXIT_OK


def _table_rows(verdict: dict) -> list[dict]:
    rows = []
    for c in verdict["checks"]:
        value = np.atleast_1d(np.asarray(c.get("value"), dtype=object))
        rows.append({
            "check": c["check"],
            "value": repr(c.get("value")) if value.size > 1 or value.dtype == object else float(value[0]),
            "std_error": repr(c.get("std_error", "")),
            "target": repr(c.get("target", "")),
            "pass": bool(c["pass"]),
        })
    return rows


def cmd_verify(a) -> int:
    p = ModelParams(a.n_particles, a.dim, a.lam, 0.0, a.energy, 1.0)
    kw = {}
    if a.horizon is not None:
        kw["horizon"] = a.horizon
    if a.k_max is not None and a.check in ("vcorr", "greenkubo"):
        kw["k_max"] = a.k_max
    if a.epsilons is not None and a.check in ("momentfit", "converge"):
        kw["eps_list"] = tuple(a.epsilons)
    if a.times is not None and a.check == "converge":
        kw["times"] = tuple(a.times)
    if a.check == "ou-limit":
        kw.pop("horizon", None)
        verdict = experiments.run_ou_limit(a.paths, a.seed, n=a.n)
    else:
        runner = {
            "autocov": experiments.run_autocov,
            "decay": experiments.run_decay,
            "vcorr": experiments.run_vcorr,
            "greenkubo": experiments.run_greenkubo,
            "momentfit": experiments.run_momentfit,
            "converge": experiments.run_converge,
            "stationary": experiments.run_stationary,
        }[a.check]
        if a.check in ("converge", "stationary", "decay"):
            kw.pop("horizon", None)
        verdict = runner(p, a.paths, a.seed, **kw)
    for c in verdict["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['check']}")
    for w in verdict["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    if a.out is not None:
        cfg = ExperimentConfig(f"verify-{a.check}", p, a.paths, a.seed, a.out, threads=a.threads, extra=kw)
        with OutputSet(cfg.out_dir) as out:
            write_json(out.path("verdict.json"), verdict)
            write_records(out.path("table.csv"), _table_rows(verdict), ["check", "value", "std_error", "target", "pass"])
            _manifest(cfg, out)
    return EXIT_OK if verdict["pass"] else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "lift": cmd_lift, "sde": cmd_sde, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = args.threads if args.threads is not None else thread_budget()
        if threads < 1:
            raise UsageError("--threads must be >= 1")
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"thermostat-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args.threads = threads
    set_threads(threads)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ThermostatLabError, ValueError) as exc:
        if isinstance(exc, (CsvParseError, StepSizeError)):
            print(f"thermostat-lab: error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        parser.print_usage(sys.stderr)
        print(f"thermostat-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, RuntimeError, FloatingPointError) as exc:
        print(f"thermostat-lab: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

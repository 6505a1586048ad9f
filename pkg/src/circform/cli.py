"""Command-line entry points.

Subcommands:

  run <scenario>        simulate one scenario and write its artifacts
  verify [--suite S]    run the numerical property suites
  list-scenarios        show the bundled scenario names
  sweep <scenario>      run one-parameter variants concurrently

``run`` exits 0 when the scenario converged, 2 when it completed without
converging, and 1 on any error; diagnostics go to stderr.  Artifacts are
trajectory.csv, metrics.csv, report.json, and PNG figures, written to
--out, the scenario's configured directory, $CIRCFORM_OUT/<name>, or
./out/<name>, in that order of preference.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .scenario import (Scenario, ScenarioError, bundled_scenario_names,
                       find_scenario, parse_scenario_data, serialize_scenario)
from .sim import ConvergenceReport, SimulationDiverged, Trajectory
from .verify import format_table, run_suites

_FMT = "%.9g"


def _default_out(name: str) -> Path:
    env = os.environ.get("CIRCFORM_OUT")
    return (Path(env) if env else Path("out")) / name


def write_trajectory_csv(path: Path, traj: Trajectory,
                         wrap_headings: bool = False) -> None:
    """One row per (sample, agent); headings unwrapped radians.

    ``wrap_headings`` appends a theta_mod column reduced to [0, 2*pi).
    """
    cols = "t,agent,x,y,theta,omega,u"
    if wrap_headings:
        cols += ",theta_mod"
    lines = [cols]
    for i, t in enumerate(traj.times):
        for k in range(traj.n):
            row = (t, traj.positions[i, k].real, traj.positions[i, k].imag,
                   traj.headings[i, k], traj.omegas[i, k],
                   traj.controls[i, k])
            text = (_FMT % row[0]) + f",{k + 1}," + ",".join(
                _FMT % v for v in row[1:])
            if wrap_headings:
                text += "," + _FMT % (traj.headings[i, k] % (2.0 * np.pi))
            lines.append(text)
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_metrics_csv(path: Path, traj: Trajectory) -> None:
    header = ("t," + ",".join(f"p{m}_abs" for m in traj.orders)
              + ",omega_err_max,radius_err_max,centroid_x,centroid_y,lyapunov")
    lines = [header]
    radius_max = np.abs(traj.radius_err).max(axis=1)
    omega_max = traj.omega_err.max(axis=1)
    for i, t in enumerate(traj.times):
        cells = [_FMT % t]
        cells += [_FMT % v for v in traj.order_magnitudes[i]]
        cells.append(_FMT % omega_max[i])
        cells.append("" if math.isnan(radius_max[i]) else _FMT % radius_max[i])
        cells.append(_FMT % traj.centroid[i].real)
        cells.append(_FMT % traj.centroid[i].imag)
        cells.append(_FMT % traj.lyapunov[i])
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return None if math.isnan(f) or math.isinf(f) else f
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def write_report_json(path: Path, name: str,
                      report: ConvergenceReport) -> None:
    payload = {
        "scenario": name,
        "converged": report.converged,
        "t_converged": report.t_converged,
        "final": report.final,
        "lyapunov_violations": report.lyapunov_violations,
    }
    if report.blocks is not None:
        payload["blocks"] = list(report.blocks)
    path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n",
                    newline="\n")


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    integ = scenario.integration
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if getattr(args, "record_every", None) is not None:
        changes["record_every"] = args.record_every
    if changes:
        integ = dataclasses.replace(integ, **changes)
        scenario = dataclasses.replace(scenario, integration=integ)
    return scenario


def _execute(scenario: Scenario, out_dir: Path, seed,
             wrap_headings: bool = False) -> int:
    from . import sim
    from .figures import render_figures

    out_dir.mkdir(parents=True, exist_ok=True)
    traj, report = sim.run(scenario, seed=seed)
    outputs = scenario.outputs
    if outputs.trajectory:
        write_trajectory_csv(out_dir / "trajectory.csv", traj,
                             wrap_headings=wrap_headings)
    if outputs.metrics:
        write_metrics_csv(out_dir / "metrics.csv", traj)
    if outputs.report:
        write_report_json(out_dir / "report.json", scenario.name, report)
    if outputs.figures:
        graph = scenario.build_graph()
        config = scenario.build_controller(graph)
        render_figures(traj, config, report, out_dir, name=scenario.name)
    return 0 if report.converged else 2


def _cmd_run(args) -> int:
    scenario = find_scenario(args.scenario)
    scenario = _apply_overrides(scenario, args)
    out_dir = (Path(args.out) if args.out
               else Path(scenario.outputs.directory)
               if scenario.outputs.directory
               else _default_out(scenario.name))
    code = _execute(scenario, out_dir, args.seed,
                    wrap_headings=args.wrap_headings)
    status = "converged" if code == 0 else "did not converge"
    print(f"{scenario.name}: {status}; artifacts in {out_dir}")
    return code


def _cmd_verify(args) -> int:
    rows = run_suites(args.suite)
    print(format_table(rows))
    return 0 if all(r.passed for r in rows) else 1


def _cmd_list(_args) -> int:
    for name in bundled_scenario_names():
        print(name)
    return 0


_SWEEP_CONTROLLER = ("K", "kappa", "Omega_d")
_SWEEP_INTEGRATION = ("dt", "t_end")


def _variant(scenario: Scenario, param: str, value: float) -> Scenario:
    if param in _SWEEP_CONTROLLER:
        field = "omega_d" if param == "Omega_d" else param
        ctrl = dataclasses.replace(scenario.controller, **{field: value})
        return dataclasses.replace(scenario, controller=ctrl)
    integ = dataclasses.replace(scenario.integration, **{param: value})
    return dataclasses.replace(scenario, integration=integ)


def _sweep_worker(payload) -> tuple:
    data, out_dir, seed = payload
    scenario = parse_scenario_data(data)
    try:
        code = _execute(scenario, Path(out_dir), seed)
    except (ScenarioError, SimulationDiverged, OSError) as exc:
        print(f"{scenario.name}: {exc}", file=sys.stderr)
        code = 1
    return scenario.name, out_dir, code


def _cmd_sweep(args) -> int:
    scenario = find_scenario(args.scenario)
    scenario = _apply_overrides(scenario, args)
    param = args.param
    if param not in _SWEEP_CONTROLLER + _SWEEP_INTEGRATION:
        print(f"sweep: unsupported --param {param!r}; choose from "
              f"{_SWEEP_CONTROLLER + _SWEEP_INTEGRATION}", file=sys.stderr)
        return 1
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        print(f"sweep: --values must be comma-separated numbers, "
              f"got {args.values!r}", file=sys.stderr)
        return 1
    if not values:
        print("sweep: --values is empty", file=sys.stderr)
        return 1

    base = Path(args.out) if args.out else _default_out(scenario.name)
    jobs = []
    for v in values:
        variant = _variant(scenario, param, v)
        variant = dataclasses.replace(
            variant, name=f"{scenario.name}_{param}_{v:g}",
            outputs=dataclasses.replace(variant.outputs, directory=None))
        jobs.append((serialize_scenario(variant),
                     str(base / f"{param}_{v:g}"), args.seed))

    worst = 0
    with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)
                             ) as pool:
        for name, out_dir, code in pool.map(_sweep_worker, jobs):
            status = {0: "converged", 2: "did not converge"}.get(code, "error")
            print(f"{name}: {status}; artifacts in {out_dir}")
            worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circform",
        description="Collective circular motion simulations: steer "
        "unit-speed planar agents into synchronized, balanced, or "
        "patterned circular formations over a communication graph.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("scenario",
                     help="bundled scenario name or path to a YAML file")
    run.add_argument("--out", help="output directory")
    run.add_argument("--dt", type=float, help="override step size [s]")
    run.add_argument("--t-end", type=float, dest="t_end",
                     help="override duration [s]")
    run.add_argument("--record-every", type=int, dest="record_every",
                     help="override recording stride")
    run.add_argument("--seed", type=int,
                     help="override the seed of randomized initial states")
    run.add_argument("--wrap-headings", action="store_true",
                     help="append a mod-2pi heading column to trajectory.csv")
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="run numerical property suites")
    ver.add_argument("--suite", default="all",
                     choices=("all", "graphs", "potentials", "lyapunov"))
    ver.set_defaults(func=_cmd_verify)

    lst = sub.add_parser("list-scenarios", help="list bundled scenarios")
    lst.set_defaults(func=_cmd_list)

    sweep = sub.add_parser("sweep",
                           help="run variants of one scenario concurrently")
    sweep.add_argument("scenario")
    sweep.add_argument("--param", required=True,
                       help="field to vary: K, kappa, Omega_d, dt, t_end")
    sweep.add_argument("--values", required=True,
                       help="comma-separated values")
    sweep.add_argument("--out", help="base output directory")
    sweep.add_argument("--dt", type=float)
    sweep.add_argument("--t-end", type=float, dest="t_end")
    sweep.add_argument("--seed", type=int)
    sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except SimulationDiverged as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

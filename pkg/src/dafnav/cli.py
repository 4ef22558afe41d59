"""Command-line front end.

Four subcommands: run executes a scenario's avoidance controller and
writes trajectory CSVs, a summary JSON, and plots; compare runs the
avoidance and baseline controllers from identical starts and emits a
side-by-side report; analyze locates blocking points and classifies
them; validate checks a scenario file and prints the environment
report.  Exit codes: 0 success, 1 scenario or configuration problem,
2 unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import escape_probe, find_equilibria, metrics
from .geometry import ConfigurationError, validate_environment
from .scenario import ScenarioError, bundled_scenarios, load_scenario, override_sim
from .simulation import batch_simulate


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dafnav",
        description="Simulate dissipative avoidance runs from scenario files.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out_dir=True):
        p.add_argument("scenario",
                       help="scenario JSON path or bundled name "
                            f"({', '.join(bundled_scenarios())})")
        if out_dir:
            p.add_argument("--out-dir", default="out",
                           help="directory for artifacts (default: out)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario RNG seed")
        p.add_argument("--dt", type=float, default=None,
                       help="override the integrator step")
        p.add_argument("--t-max", type=float, default=None,
                       help="override the time horizon")

    p_run = sub.add_parser("run", help="simulate the avoidance controller")
    add_common(p_run)
    p_run.add_argument("--sensor-mode", choices=("oracle", "lidar"),
                       default="oracle",
                       help="clearance source: exact field or simulated sweeps")
    p_run.add_argument("--no-plot", action="store_true",
                       help="skip SVG emission")

    p_cmp = sub.add_parser("compare",
                           help="run avoidance and baseline side by side")
    add_common(p_cmp)
    p_cmp.add_argument("--sensor-mode", choices=("oracle", "lidar"),
                       default="oracle")
    p_cmp.add_argument("--no-plot", action="store_true")

    p_ana = sub.add_parser("analyze", help="locate and classify blocking points")
    add_common(p_ana)
    p_ana.add_argument("--probe", type=float, default=None, metavar="SIGMA",
                       help="also nudge each blocking point by SIGMA and "
                            "report whether the robot slides free")

    p_val = sub.add_parser("validate", help="check a scenario file")
    add_common(p_val, out_dir=False)
    return parser


def _load(args):
    sc = load_scenario(args.scenario)
    return override_sim(sc, seed=args.seed, dt=args.dt, t_max=args.t_max)


def _gains_dict(gains):
    return {f.name: getattr(gains, f.name) for f in dataclasses.fields(gains)
            if isinstance(getattr(gains, f.name), float)}


def _csv_header(dim):
    cols = (["t"] + [f"p{i+1}" for i in range(dim)]
            + [f"v{i+1}" for i in range(dim)]
            + [f"u{i+1}" for i in range(dim)] + ["d", "L"])
    return ",".join(cols)


def write_trajectory_csv(path, traj):
    """One row per recorded sample; %.17g so reruns are byte-identical."""
    table = np.column_stack([traj.t, traj.p, traj.v, traj.u, traj.d, traj.energy])
    np.savetxt(path, table, fmt="%.17g", delimiter=",",
               header=_csv_header(traj.p.shape[1]), comments="")
    return path


def _row_summary(i, csv_name, traj):
    out = traj.outcome
    return {
        "index": i,
        "csv": csv_name,
        "outcome": out.kind,
        "time": out.time,
        "final_position": out.position.tolist(),
        "final_speed": out.speed,
        "metrics": metrics(traj).to_dict(),
    }


def _run_batch(sc, controller, mode):
    return batch_simulate(sc.env, controller, sc.initial_positions,
                          sc.initial_velocities, sc.sim)


def _emit_runs(out_dir, sc, results, tag):
    rows = []
    for i, tr in enumerate(results):
        name = f"{sc.name}_{tag}_run{i:02d}.csv"
        write_trajectory_csv(out_dir / name, tr)
        rows.append(_row_summary(i, name, tr))
    return rows


def _plot_batch(out_dir, sc, results, tag):
    from . import plots
    path = out_dir / f"{sc.name}_{tag}_trajectories.svg"
    if sc.dim == 2:
        plots.plot_runs_2d(path, sc.env, results, sc.target,
                           margins=(sc.gains.near, sc.gains.far), title=sc.name)
    elif sc.dim == 3:
        plots.plot_runs_3d(path, sc.env, results, sc.target, title=sc.name)
    else:
        return None
    return path


def _cmd_run(args):
    sc = _load(args)
    controller = sc.controller(args.sensor_mode)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _run_batch(sc, controller, args.sensor_mode)
    tag = f"avoidance_{args.sensor_mode}"
    rows = _emit_runs(out_dir, sc, results, tag)
    summary = {
        "scenario": sc.name,
        "controller": "avoidance",
        "sensor_mode": args.sensor_mode,
        "seed": sc.sim.seed,
        "dt": sc.sim.dt,
        "t_max": sc.sim.t_max,
        "gains": _gains_dict(sc.gains),
        "runs": rows,
    }
    summary_path = out_dir / f"{sc.name}_{tag}_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    for row in rows:
        m = row["metrics"]
        print(f"run {row['index']:02d}: {row['outcome']:<16} "
              f"t={row['time']:7.2f}  min_d0={m['min_clearance']:.3f}  "
              f"peak_u={m['peak_accel'] if m['peak_accel'] is not None else float('nan'):.1f}")
    kinds = [r["outcome"] for r in rows]
    print(f"{kinds.count('converged')}/{len(kinds)} converged")
    if not args.no_plot:
        plot = _plot_batch(out_dir, sc, results, tag)
        if plot is not None:
            print(f"wrote {plot}")
    print(f"wrote {summary_path}")
    return 0


def _fmt_metrics_table(rows):
    head = (f"{'row':>3}  {'controller':<10} {'outcome':<16} {'t':>7} "
            f"{'peak_u':>10} {'peak_v':>8} {'path':>8} {'min_d0':>7}")
    lines = [head, "-" * len(head)]
    for r in rows:
        m = r["metrics"]
        pu = m["peak_accel"]
        lines.append(
            f"{r['index']:>3}  {r['controller']:<10} {r['outcome']:<16} "
            f"{r['time']:>7.2f} {pu if pu is not None else float('nan'):>10.2f} "
            f"{m['peak_speed']:>8.2f} {m['path_length']:>8.2f} "
            f"{m['min_clearance']:>7.3f}")
    return "\n".join(lines)


def _cmd_compare(args):
    sc = _load(args)
    avoid = sc.controller(args.sensor_mode)
    base = sc.baseline_controller(args.sensor_mode)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # both batches advance independently; artifacts are written afterwards
    # by this thread only
    with ThreadPoolExecutor(max_workers=2) as pool:
        fut_a = pool.submit(_run_batch, sc, avoid, args.sensor_mode)
        fut_b = pool.submit(_run_batch, sc, base, args.sensor_mode)
        res_a, res_b = fut_a.result(), fut_b.result()
    rows_a = _emit_runs(out_dir, sc, res_a, f"avoidance_{args.sensor_mode}")
    rows_b = _emit_runs(out_dir, sc, res_b, f"baseline_{args.sensor_mode}")
    for r, label in [(rows_a, "avoidance"), (rows_b, "baseline")]:
        for row in r:
            row["controller"] = label
    table_rows = [row for pair in zip(rows_a, rows_b) for row in pair]

    def peak(rows, key):
        vals = [r["metrics"][key] for r in rows if r["metrics"][key] is not None]
        return max(vals) if vals else None

    peaks = {
        "avoidance_peak_accel": peak(rows_a, "peak_accel"),
        "baseline_peak_accel": peak(rows_b, "peak_accel"),
        "avoidance_peak_speed": peak(rows_a, "peak_speed"),
        "baseline_peak_speed": peak(rows_b, "peak_speed"),
    }
    summary = {
        "scenario": sc.name,
        "sensor_mode": args.sensor_mode,
        "seed": sc.sim.seed,
        "dt": sc.sim.dt,
        "t_max": sc.sim.t_max,
        "controllers": {
            "avoidance": _gains_dict(sc.gains),
            "baseline": {"kind": sc.baseline_kind,
                         **_gains_dict(sc.baseline_gains)},
        },
        "peaks": peaks,
        "runs": table_rows,
    }
    summary_path = out_dir / f"{sc.name}_compare.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    print(_fmt_metrics_table(table_rows))

    def show(v):
        return "nan" if v is None else f"{v:.2f}"

    print(f"peak accel: avoidance {show(peaks['avoidance_peak_accel'])} "
          f"vs baseline {show(peaks['baseline_peak_accel'])}")
    print(f"peak speed: avoidance {show(peaks['avoidance_peak_speed'])} "
          f"vs baseline {show(peaks['baseline_peak_speed'])}")
    if not args.no_plot and sc.dim >= 2:
        from . import plots
        plot_path = out_dir / f"{sc.name}_compare.svg"
        plots.plot_compare(plot_path, res_a, res_b, "avoidance", "baseline",
                           sc.gains.near, sc.gains.far, title=sc.name)
        print(f"wrote {plot_path}")
    print(f"wrote {summary_path}")
    return 0


def _cmd_analyze(args):
    sc = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = find_equilibria(sc.env, sc.target, sc.gains)
    entries = []
    for rep in reports:
        entry = rep.to_dict()
        if args.probe is not None:
            probe = escape_probe(sc.env, rep, sc.target, sc.gains,
                                 sigma=args.probe)
            entry["probe"] = {"escaped": probe.escaped, "sigma": probe.sigma,
                              "attempts": probe.attempts}
        entries.append(entry)
    doc = {"scenario": sc.name,
           "gains": _gains_dict(sc.gains),
           "blocking_points": entries}
    out_path = out_dir / f"{sc.name}_equilibria.json"
    out_path.write_text(json.dumps(doc, indent=2) + "\n")
    if not entries:
        print("no blocking points: the goal pull is nowhere cancelled "
              "by the boundary")
    else:
        head = (f"{'#':>2} {'position':<24} {'dist':>6} {'top curv':>9} "
                f"{'threshold':>9} {'unstable':>8}")
        print(head)
        print("-" * len(head))
        for k, e in enumerate(entries):
            pos = "(" + ", ".join(f"{x:.3f}" for x in e["position"]) + ")"
            line = (f"{k:>2} {pos:<24} {e['target_distance']:>6.3f} "
                    f"{e['eigenvalues'][0]:>9.4f} "
                    f"{e['curvature_threshold']:>9.4f} "
                    f"{str(e['unstable']):>8}")
            if "probe" in e:
                line += f"  probe: {'escaped' if e['probe']['escaped'] else 'stayed'}"
            print(line)
    print(f"wrote {out_path}")
    return 0


def _cmd_validate(args):
    sc = _load(args)
    report = validate_environment(sc.env)
    print(report)
    print(f"scenario {sc.name}: ok "
          f"({sc.dim}-d, {len(sc.env.obstacles)} obstacles, "
          f"{len(sc.initial_positions)} initial states)")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "compare": _cmd_compare,
    "analyze": _cmd_analyze,
    "validate": _cmd_validate,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ScenarioError, ConfigurationError, FileNotFoundError,
            IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"unexpected failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

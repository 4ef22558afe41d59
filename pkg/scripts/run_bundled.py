"""Run bundled scenarios end to end and print a metrics table.

Loads each requested scenario, integrates every initial state with the
avoidance controller, and writes trajectory CSVs, a summary JSON, and
an SVG plot per scene.  This is the library-level equivalent of
`dafnav run`, kept as a script so the batch loop is easy to tweak.

Usage:
    python scripts/run_bundled.py --scenarios paper2d paper3d --out-dir out
    python scripts/run_bundled.py --sensor-mode lidar --scenarios paper2d
"""

import argparse
import json
import time
from pathlib import Path

from dafnav import batch_simulate, bundled_scenarios, load_scenario, metrics
from dafnav import plots

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--scenarios", nargs="+", default=["paper2d", "paper3d"],
                    help=f"bundled names ({', '.join(bundled_scenarios())}) "
                         "or JSON paths")
parser.add_argument("--sensor-mode", choices=("oracle", "lidar"),
                    default="oracle",
                    help="clearance source for the controller")
parser.add_argument("--out-dir", default="out", help="artifact directory")
parser.add_argument("--no-plot", action="store_true", help="skip SVG output")
args = parser.parse_args()

out_dir = Path(args.out_dir)
out_dir.mkdir(parents=True, exist_ok=True)

for name in args.scenarios:
    sc = load_scenario(name)
    controller = sc.controller(args.sensor_mode)
    t0 = time.perf_counter()
    results = batch_simulate(sc.env, controller, sc.initial_positions,
                             sc.initial_velocities, sc.sim)
    wall = time.perf_counter() - t0

    print(f"\n{sc.name}  ({len(results)} runs, {args.sensor_mode} mode, "
          f"{wall:.1f}s wall)")
    print(f"{'run':>4} {'outcome':<18} {'time':>7} {'path':>7} "
          f"{'peak |u|':>9} {'peak |v|':>9} {'min d0':>7}")
    rows = []
    for i, tr in enumerate(results):
        m = metrics(tr)
        print(f"{i:>4} {tr.outcome.kind:<18} {tr.outcome.time:>7.2f} "
              f"{m.path_length:>7.2f} {m.peak_accel:>9.2f} "
              f"{m.peak_speed:>9.2f} {m.min_clearance:>7.3f}")
        rows.append({"index": i, "outcome": tr.outcome.kind,
                     "metrics": m.to_dict()})

    report = out_dir / f"{sc.name}_{args.sensor_mode}_batch.json"
    report.write_text(json.dumps({"scenario": sc.name, "wall_s": wall,
                                  "runs": rows}, indent=2) + "\n")
    print(f"report: {report}")

    if not args.no_plot and sc.dim in (2, 3):
        svg = out_dir / f"{sc.name}_{args.sensor_mode}_batch.svg"
        if sc.dim == 2:
            plots.plot_runs_2d(svg, sc.env, results, sc.target,
                               margins=(sc.gains.near, sc.gains.far),
                               title=sc.name)
        else:
            plots.plot_runs_3d(svg, sc.env, results, sc.target,
                               title=sc.name)
        print(f"plot:   {svg}")

"""Compare control effort between the avoidance and baseline controllers.

Runs both controllers of a scenario from identical starts, prints peak
acceleration and peak speed side by side, and writes the comparison
plot.  The avoidance law brakes along the obstacle normal instead of
pushing against it, so its peak input should come out well below the
repulsive baseline at matched tracking gains.

Usage:
    python scripts/compare_effort.py                 # bundled compare2d
    python scripts/compare_effort.py my_scene.json --out-dir results
"""

import argparse
from pathlib import Path

from dafnav import batch_simulate, load_scenario, metrics
from dafnav import plots

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("scenario", nargs="?", default="compare2d",
                    help="scenario with a baseline block (default compare2d)")
parser.add_argument("--sensor-mode", choices=("oracle", "lidar"),
                    default="oracle")
parser.add_argument("--out-dir", default="out", help="artifact directory")
args = parser.parse_args()

sc = load_scenario(args.scenario)
out_dir = Path(args.out_dir)
out_dir.mkdir(parents=True, exist_ok=True)

batches = {}
for label, controller in (("avoidance", sc.controller(args.sensor_mode)),
                          ("baseline", sc.baseline_controller(args.sensor_mode))):
    batches[label] = batch_simulate(sc.env, controller, sc.initial_positions,
                                    sc.initial_velocities, sc.sim)

print(f"{sc.name}: {len(sc.initial_positions)} starts, "
      f"{args.sensor_mode} mode")
print(f"{'controller':<11} {'run':>4} {'outcome':<12} {'peak |u|':>9} "
      f"{'peak |v|':>9} {'path':>7} {'min d0':>7}")
peaks = {}
for label, results in batches.items():
    ms = [metrics(tr) for tr in results]
    for i, (tr, m) in enumerate(zip(results, ms)):
        print(f"{label:<11} {i:>4} {tr.outcome.kind:<12} {m.peak_accel:>9.2f} "
              f"{m.peak_speed:>9.2f} {m.path_length:>7.2f} "
              f"{m.min_clearance:>7.3f}")
    peaks[label] = (max(m.peak_accel for m in ms),
                    max(m.peak_speed for m in ms))

accel_ratio = peaks["baseline"][0] / peaks["avoidance"][0]
speed_ratio = peaks["avoidance"][1] / peaks["baseline"][1]
print(f"\npeak accel: avoidance {peaks['avoidance'][0]:.2f} vs "
      f"baseline {peaks['baseline'][0]:.2f} ({accel_ratio:.2f}x headroom)")
print(f"peak speed ratio (avoidance/baseline): {speed_ratio:.3f}")

svg = out_dir / f"{sc.name}_effort.svg"
plots.plot_compare(svg, batches["avoidance"], batches["baseline"],
                   "avoidance", "baseline", sc.gains.near, sc.gains.far,
                   title=sc.name)
print(f"plot: {svg}")

"""Classify blocking points and test the classification dynamically.

For each scenario this locates the points where an obstacle's inflated
shell lines up with the target direction, compares the top boundary
curvature against the damping threshold, then kicks a simulated robot
off each point along the flattest boundary direction and reports
whether it actually left.  The two bracket scenes differ only in
damping and sit on either side of the threshold; trap2d is a plain
pinned case.

Usage:
    python scripts/probe_blocking_points.py
    python scripts/probe_blocking_points.py --scenarios trap2d --sigma 1e-2
"""

import argparse

from dafnav import curvature_condition, escape_probe, find_equilibria, load_scenario

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--scenarios", nargs="+",
                    default=["bracket2d_k068", "bracket2d_k093", "trap2d"])
parser.add_argument("--sigma", type=float, default=1e-3,
                    help="probe kick size (0 skips the simulation)")
args = parser.parse_args()

for name in args.scenarios:
    sc = load_scenario(name)
    reports = find_equilibria(sc.env, sc.target, sc.gains)
    print(f"\n{sc.name}: {len(reports)} blocking point(s), "
          f"k_damp/k_goal = {sc.gains.k_damp / sc.gains.k_goal:.2f}")
    print(f"{'position':<22} {'dist':>6} {'top curv':>9} {'threshold':>10} "
          f"{'flagged':>8} {'escaped':>8} {'outcome':<12}")
    for rep in reports:
        flagged = curvature_condition(rep, sc.gains.k_goal, sc.gains.k_damp)
        pos = "(" + ", ".join(f"{x:.3f}" for x in rep.position) + ")"
        line = (f"{pos:<22} {rep.target_distance:>6.2f} "
                f"{rep.eigenvalues[0]:>9.4f} {rep.curvature_threshold:>10.4f} "
                f"{str(flagged):>8}")
        if args.sigma > 0.0:
            pr = escape_probe(sc.env, rep, sc.target, sc.gains,
                              sigma=args.sigma)
            line += (f" {str(pr.escaped):>8} "
                     f"{pr.trajectory.outcome.kind:<12}")
        print(line)

print("\nA flagged point whose probe stays pinned was recaptured: the "
      "curvature flag is\na local test of the linearized boundary, not a "
      "guarantee about the basin the\nkick lands in.")

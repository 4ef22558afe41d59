"""SVG rendering of scenes, trajectories, and controller comparisons.

All functions write a figure to a path and return that path; nothing is
shown interactively.  The Agg backend is forced so the module works in
headless sessions.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle, Ellipse as EllipsePatch, Polygon, Rectangle

from .geometry import Ball, BallWorkspace, BoxWorkspace, Ellipsoid

_GRID = 320


def _view_bounds(env, extra_pts=None, pad=0.5):
    pts = []
    ws = env.workspace
    if isinstance(ws, BoxWorkspace):
        pts.append(np.vstack([ws.lo, ws.hi]))
    elif isinstance(ws, BallWorkspace):
        pts.append(np.vstack([ws.center - ws.radius, ws.center + ws.radius]))
    for ob in env.obstacles:
        pts.append(ob.boundary_samples(64))
    if extra_pts is not None:
        pts.extend(np.asarray(p, dtype=float).reshape(-1, env.dim) for p in extra_pts)
    allp = np.vstack(pts)
    return allp.min(axis=0) - pad, allp.max(axis=0) + pad


def _draw_obstacle_2d(ax, ob, **style):
    if isinstance(ob, Ball):
        ax.add_patch(Circle(ob.center, ob.radius, **style))
    elif isinstance(ob, Ellipsoid):
        ang = np.degrees(np.arctan2(ob.orientation[1, 0], ob.orientation[0, 0]))
        ax.add_patch(EllipsePatch(ob.center, 2 * ob.semi_axes[0],
                                  2 * ob.semi_axes[1], angle=ang, **style))
    else:
        pts, _ = ob.boundary_curve(400)
        ax.add_patch(Polygon(pts, closed=True, **style))


def draw_scene_2d(ax, env, margins=None):
    """Obstacle fills, workspace outline, and clearance level sets.

    margins: optional (near, far) pair; level sets of the raw boundary
    distance are drawn at the inflation radius and at the two band edges.
    """
    lo, hi = _view_bounds(env)
    ws = env.workspace
    if isinstance(ws, BoxWorkspace):
        ax.add_patch(Rectangle(ws.lo, *(ws.hi - ws.lo), fill=False,
                               edgecolor="0.2", linewidth=1.2))
    elif isinstance(ws, BallWorkspace):
        ax.add_patch(Circle(ws.center, ws.radius, fill=False,
                            edgecolor="0.2", linewidth=1.2))
    for ob in env.obstacles:
        _draw_obstacle_2d(ax, ob, facecolor="0.55", edgecolor="0.25", zorder=3)

    xs = np.linspace(lo[0], hi[0], _GRID)
    ys = np.linspace(lo[1], hi[1], _GRID)
    X, Y = np.meshgrid(xs, ys)
    D = env.d0_many(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    levels = [env.epsilon]
    fmts = [("tab:red", "solid")]
    if margins is not None:
        near, far = margins
        levels += [env.epsilon + near, env.epsilon + far]
        fmts += [("tab:orange", "dashed"), ("tab:green", "dotted")]
    for lv, (color, ls) in zip(levels, fmts):
        ax.contour(X, Y, D, levels=[lv], colors=[color], linestyles=ls,
                   linewidths=0.9, zorder=2)

    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")


def plot_runs_2d(path, env, trajectories, target, margins=None, title=None):
    """Scene plus one polyline per trajectory, start markers, target star."""
    fig, ax = plt.subplots(figsize=(7.2, 6.0))
    draw_scene_2d(ax, env, margins=margins)
    cmap = plt.get_cmap("viridis")
    n = max(1, len(trajectories))
    for i, tr in enumerate(trajectories):
        c = cmap(i / max(1, n - 1)) if n > 1 else cmap(0.3)
        ax.plot(tr.p[:, 0], tr.p[:, 1], color=c, linewidth=1.1, zorder=4)
        ax.plot(tr.p[0, 0], tr.p[0, 1], "o", color=c, markersize=4, zorder=5)
    ax.plot(target[0], target[1], "*", color="tab:red", markersize=13, zorder=6)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _shadow_ellipse(ob, i, j):
    # shadow of an ellipsoid on a coordinate plane: principal 2x2 block of
    # the shape matrix O diag(a^2) O^T
    Q = ob.orientation @ np.diag(ob.semi_axes**2) @ ob.orientation.T
    S = Q[np.ix_([i, j], [i, j])]
    w, V = np.linalg.eigh(S)
    ang = np.degrees(np.arctan2(V[1, 1], V[0, 1]))
    return (ob.center[i], ob.center[j]), 2 * np.sqrt(w[1]), 2 * np.sqrt(w[0]), ang


def plot_runs_3d(path, env, trajectories, target, title=None):
    """Three orthographic projections (xy, xz, yz) of a 3-d scene."""
    pairs = [(0, 1), (0, 2), (1, 2)]
    names = "xyz"
    fig, axes = plt.subplots(1, 3, figsize=(13.5, 4.6))
    lo, hi = _view_bounds(env, extra_pts=[target] + [tr.p for tr in trajectories])
    cmap = plt.get_cmap("viridis")
    n = max(1, len(trajectories))
    for ax, (i, j) in zip(axes, pairs):
        ws = env.workspace
        if isinstance(ws, BoxWorkspace):
            ax.add_patch(Rectangle((ws.lo[i], ws.lo[j]), ws.hi[i] - ws.lo[i],
                                   ws.hi[j] - ws.lo[j], fill=False,
                                   edgecolor="0.2", linewidth=1.2))
        for ob in env.obstacles:
            if isinstance(ob, Ball):
                ax.add_patch(Circle((ob.center[i], ob.center[j]), ob.radius,
                                    facecolor="0.55", edgecolor="0.25", zorder=3))
            elif isinstance(ob, Ellipsoid):
                ctr, w, h, ang = _shadow_ellipse(ob, i, j)
                ax.add_patch(EllipsePatch(ctr, w, h, angle=ang, facecolor="0.55",
                                          edgecolor="0.25", zorder=3))
        for k, tr in enumerate(trajectories):
            c = cmap(k / max(1, n - 1)) if n > 1 else cmap(0.3)
            ax.plot(tr.p[:, i], tr.p[:, j], color=c, linewidth=1.0, zorder=4)
            ax.plot(tr.p[0, i], tr.p[0, j], "o", color=c, markersize=4, zorder=5)
        ax.plot(target[i], target[j], "*", color="tab:red", markersize=12, zorder=6)
        ax.set_xlim(lo[i], hi[i])
        ax.set_ylim(lo[j], hi[j])
        ax.set_aspect("equal")
        ax.set_xlabel(names[i])
        ax.set_ylabel(names[j])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _shade_bands(ax, tr, near, far):
    # proximity episodes of the avoidance run: light where the clearance is
    # inside the response band, darker where it is inside the near band
    for level, alpha in ((far, 0.12), (near, 0.22)):
        idx = np.flatnonzero(tr.d < level)
        if idx.size == 0:
            continue
        splits = np.flatnonzero(np.diff(idx) > 1)
        for block in np.split(idx, splits + 1):
            ax.axvspan(tr.t[block[0]], tr.t[block[-1]], color="0.3", alpha=alpha,
                       linewidth=0)


def plot_compare(path, runs_a, runs_b, label_a, label_b, near, far, title=None):
    """Acceleration and speed magnitude traces for two controllers.

    Gray spans mark times where the first controller's clearance drops
    below the far margin (light) and the near margin (dark).
    """
    fig, (ax_u, ax_v) = plt.subplots(2, 1, figsize=(8.0, 6.4), sharex=True)
    for runs, color, label in ((runs_a, "tab:blue", label_a),
                               (runs_b, "tab:orange", label_b)):
        for k, tr in enumerate(runs):
            ax_u.plot(tr.t, np.linalg.norm(tr.u, axis=1), color=color,
                      linewidth=1.0, alpha=0.9, label=label if k == 0 else None)
            ax_v.plot(tr.t, np.linalg.norm(tr.v, axis=1), color=color,
                      linewidth=1.0, alpha=0.9, label=label if k == 0 else None)
    for tr in runs_a:
        _shade_bands(ax_u, tr, near, far)
        _shade_bands(ax_v, tr, near, far)
    ax_u.set_ylabel("acceleration magnitude")
    ax_u.set_yscale("log")
    ax_v.set_ylabel("speed")
    ax_v.set_xlabel("time [s]")
    ax_u.legend(loc="upper right")
    if title:
        ax_u.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path

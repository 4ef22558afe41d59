"""Stationary-point diagnostics and run metrics.

A run can only hang where the goal pull presses straight into an
obstacle: a blocking point sits on the inflated boundary with the
target dead behind it along the inward normal. This module enumerates
those points, reads off the curvature spectrum of the distance field
there to decide whether the point can hold the robot, evaluates the
scalar clearance dynamics along recorded runs, probes blocking points
with tangential perturbations, and summarizes trajectories.

Blocking-point search covers every obstacle type (ball, ellipsoid, and
2-d spline: closed form, pole-interval root isolation, and boundary
parameter scanning respectively). Workspace shells are never searched
because a target inside the workspace cannot sit behind its own wall.
Non-isolated blocking continua (a target on an exact rotational
symmetry axis of an ellipsoid, where an entire ring blocks) are not
enumerated; the axis-pole representatives still are.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .geometry import Ball, ConfigurationError, Ellipsoid, Spline2D, query
from .simulation import AvoidanceController, SimConfig, simulate

__all__ = [
    "EquilibriumReport",
    "ProbeResult",
    "RunMetrics",
    "DistanceDynamics",
    "find_equilibria",
    "curvature_condition",
    "distance_dynamics",
    "escape_probe",
    "metrics",
]

_ALIGN_TOL = 1e-9
_SHELL_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class EquilibriumReport:
    """A blocking point with its curvature spectrum and classification.

    eigenvalues are those of the distance-field Hessian at the point,
    descending; the trailing one is ~0 along eta. unstable means the
    largest eigenvalue beats curvature_threshold, so a tangential
    perturbation grows and the robot slides free. phi_limit is the
    value the gain-weighted clearance rate settles to while pinned.
    """

    position: np.ndarray
    eta: np.ndarray
    target_distance: float
    eigenvalues: np.ndarray
    principal_dirs: np.ndarray
    curvature_threshold: float
    unstable: bool
    phi_limit: float
    residual: float
    boundary_index: int

    def to_dict(self):
        return {
            "position": self.position.tolist(),
            "eta": self.eta.tolist(),
            "target_distance": self.target_distance,
            "eigenvalues": self.eigenvalues.tolist(),
            "principal_dirs": self.principal_dirs.tolist(),
            "curvature_threshold": self.curvature_threshold,
            "unstable": self.unstable,
            "phi_limit": self.phi_limit,
            "residual": self.residual,
            "boundary_index": self.boundary_index,
        }


@dataclass(frozen=True, eq=False)
class ProbeResult:
    """Outcome of a tangential perturbation from a blocking point.

    sigma is the perturbation actually used after shrink retries. For
    sigma = 0 no simulation runs (the point is exactly stationary) and
    trajectory is None. w tracks the displacement energy about the
    blocking point along the recorded samples.
    """

    escaped: bool
    sigma: float
    attempts: int
    trajectory: object
    w: np.ndarray
    p_star: np.ndarray


@dataclass(frozen=True, eq=False)
class RunMetrics:
    """Per-run summary: effort peaks, geometry, and settling.

    min_clearance is the least raw boundary distance over the samples.
    settle_time is the first time from which the tracking error stays
    below the run's position tolerance, None if it never does.
    peak_accel is NaN only when no sample carries a finite control.
    """

    path_length: float
    peak_accel: float
    peak_speed: float
    min_clearance: float
    settle_time: float | None

    def to_dict(self):
        return {
            "path_length": self.path_length,
            "peak_accel": None if np.isnan(self.peak_accel) else self.peak_accel,
            "peak_speed": self.peak_speed,
            "min_clearance": self.min_clearance,
            "settle_time": self.settle_time,
        }


def _ball_candidates(ob, target, eps):
    axis = ob.center - target
    span = np.linalg.norm(axis)
    if span < 1e-12:
        return []
    axis = axis / span
    # Both normal-line punctures; the near one fails the sign filter.
    shell = ob.radius + eps
    return [ob.center + shell * axis, ob.center - shell * axis]


def _ellipsoid_g(t, y2, a2):
    return float(np.sum(y2 * a2 / (a2 + t) ** 2))


def _expand_down(fun, start, width):
    # Walk left until fun < 1; fun decreases toward -inf on this side.
    t = start - width
    for _ in range(80):
        if fun(t) < 1.0:
            return t
        t = start - (start - t) * 2.0
    raise ConfigurationError("root bracketing failed on the far side")


def _expand_up(fun, start, width):
    t = start + width
    for _ in range(80):
        if fun(t) < 1.0:
            return t
        t = start + (t - start) * 2.0
    raise ConfigurationError("root bracketing failed on the near side")


def _ellipsoid_candidates(ob, target, eps):
    y = ob._to_frame(target[None, :])[0]
    a2 = ob.semi_axes**2
    live = np.abs(y) > 1e-12
    if not live.any():
        return []
    y2 = y * y

    def fun(t):
        return _ellipsoid_g(t, y2, a2) - 1.0

    poles = np.unique(np.sort(-a2[live]))
    scale = float(np.sqrt(np.sum(y2 * a2)) + a2.max())
    gap = 1e-12 * scale

    roots = []
    lo = _expand_down(fun, poles[0], scale)
    roots.append(brentq(fun, lo, poles[0] - gap, xtol=1e-14, rtol=1e-15))
    hi = _expand_up(fun, poles[-1], scale)
    roots.append(brentq(fun, poles[-1] + gap, hi, xtol=1e-14, rtol=1e-15))
    for left, right in zip(poles[:-1], poles[1:]):
        width = right - left
        inner = minimize_scalar(
            fun, bounds=(left + 1e-9 * width, right - 1e-9 * width),
            method="bounded", options={"xatol": 1e-13 * width})
        if inner.fun < 0.0:
            roots.append(brentq(fun, left + gap, inner.x,
                                xtol=1e-14, rtol=1e-15))
            roots.append(brentq(fun, inner.x, right - gap,
                                xtol=1e-14, rtol=1e-15))

    feet = [y * a2 / (a2 + t) for t in roots]

    # Axis-aligned targets admit extra blocking feet off the axis: the
    # normal line leaves the dead coordinate free. One pair per zero
    # coordinate with a distinct semi-axis; repeats would form rings.
    for i in np.where(~live)[0]:
        if np.sum(np.isclose(a2, a2[i])) > 1:
            continue
        denom = a2 - a2[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(live, y * a2 / denom, 0.0)
        slack = 1.0 - float(np.sum(x * x / a2))
        if slack <= 1e-12:
            continue
        for sign in (1.0, -1.0):
            foot = x.copy()
            foot[i] = sign * ob.semi_axes[i] * np.sqrt(slack)
            feet.append(foot)

    out = []
    for foot in feet:
        nu = foot / a2
        nu = nu / np.linalg.norm(nu)
        world_foot = ob._to_world(foot[None, :])[0]
        world_nu = (nu[None, :] @ ob.orientation.T)[0]
        out.append(world_foot + eps * world_nu)
    return out


def _spline_candidates(ob, target, eps):
    K = int(ob._period)
    grid = np.linspace(0.0, K, 24 * K + 1)
    pts = ob.point(grid)
    nus = ob.outward_normal(grid)
    rel = target - pts
    f = nus[:, 0] * rel[:, 1] - nus[:, 1] * rel[:, 0]

    def cross_at(u):
        pt = ob.point(u)[0]
        nu = ob.outward_normal(u)[0]
        r = target - pt
        return nu[0] * r[1] - nu[1] * r[0]

    feet = []
    for j in range(len(grid) - 1):
        a, b = f[j], f[j + 1]
        if a == 0.0:
            feet.append(grid[j])
        elif a * b < 0.0:
            feet.append(brentq(cross_at, grid[j], grid[j + 1],
                               xtol=1e-13, rtol=1e-15))
    out = [ob.point(u)[0] + eps * ob.outward_normal(u)[0] for u in feet]
    # Merge duplicates from hits landing exactly on grid nodes.
    merged = []
    for p in out:
        if all(np.linalg.norm(p - q) > 1e-8 for q in merged):
            merged.append(p)
    return merged


def _assemble(env, idx, shell_point, target, gains):
    delta = shell_point - target
    if abs(env.d0_many(shell_point[None, :])[0] - env.epsilon) > _SHELL_TOL:
        return None  # occluded by another boundary, or off the shell
    qy = query(env, shell_point)
    lam = float(delta @ qy.eta)
    if lam <= 0.0:
        return None  # pull points away from the boundary here
    residual = float(np.linalg.norm(delta - lam * qy.eta))
    if residual > _ALIGN_TOL * max(1.0, lam):
        return None
    w, vecs = np.linalg.eigh(qy.hessian)
    order = np.argsort(w)[::-1]
    eigenvalues = w[order]
    dirs = vecs[:, order].T
    threshold = min(1.0, gains.k_damp / gains.k_goal) / lam
    return EquilibriumReport(
        position=shell_point,
        eta=qy.eta,
        target_distance=lam,
        eigenvalues=eigenvalues,
        principal_dirs=dirs,
        curvature_threshold=threshold,
        unstable=bool(eigenvalues[0] > threshold),
        phi_limit=-gains.k_goal * lam / gains.k_avoid,
        residual=residual,
        boundary_index=idx,
    )


def find_equilibria(env, target, gains):
    """All isolated blocking points of the scene for this target.

    Returns one report per point where the goal pull is exactly
    anti-aligned with the free-space normal on the inflated boundary,
    classified against the supplied gains. Empty when nothing blocks.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (env.dim,):
        raise ConfigurationError("target dimension mismatch")
    reports = []
    for idx, ob in enumerate(env.obstacles):
        if isinstance(ob, Ball):
            shell_points = _ball_candidates(ob, target, env.epsilon)
        elif isinstance(ob, Ellipsoid):
            shell_points = _ellipsoid_candidates(ob, target, env.epsilon)
        elif isinstance(ob, Spline2D):
            shell_points = _spline_candidates(ob, target, env.epsilon)
        else:
            continue
        for shell_point in shell_points:
            rep = _assemble(env, idx, shell_point, target, gains)
            if rep is not None:
                reports.append(rep)
    reports.sort(key=lambda r: (r.boundary_index, r.target_distance))
    return reports


def curvature_condition(report, k_goal, k_damp):
    """True when the boundary curves away sharply enough to shed the
    robot from this blocking point under the given gains."""
    rhs = min(1.0, k_damp / k_goal) / report.target_distance
    return bool(report.eigenvalues[0] > rhs)


DistanceDynamics = namedtuple("DistanceDynamics",
                              ["d_dot", "phi", "alpha", "d_ddot"])


def distance_dynamics(p, v, q, target, gains):
    """Scalar clearance dynamics at one state.

    q is a full field query at p (with Hessian). Returns the clearance
    rate, the gain-weighted rate phi, the drive term alpha combining
    goal pull and path curvature, and the implied clearance
    acceleration.
    """
    if q.hessian is None:
        raise ConfigurationError("distance_dynamics needs a query "
                                 "carrying the field Hessian")
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    target = np.asarray(target, dtype=float)
    d_dot = float(q.eta @ v)
    phi = float(gains.gain(q.d)) * d_dot
    alpha = gains.k_goal * float(q.eta @ (p - target)) - float(v @ q.hessian @ v)
    d_ddot = -gains.k_avoid * phi - gains.k_damp * d_dot - alpha
    return DistanceDynamics(d_dot, phi, alpha, d_ddot)


def escape_probe(env, report, target, gains, sigma=1e-3, config=None):
    """Nudge the robot off a blocking point along the top curvature
    direction and watch whether it slides free.

    Start and velocity are both sigma times the leading principal
    direction; a start that lands outside the free space retries with
    half the perturbation, up to ten times. Escape means some recorded
    sample leaves the ball of radius 10 sigma around the point. A zero
    sigma is reported as stationary without simulating: the blocking
    point itself is an exact rest state of the pull-against-boundary
    balance.
    """
    target = np.asarray(target, dtype=float)
    p_star = report.position
    if sigma == 0.0:
        return ProbeResult(escaped=False, sigma=0.0, attempts=0,
                           trajectory=None, w=np.zeros(1),
                           p_star=p_star.copy())
    if sigma < 0.0 or not np.isfinite(sigma):
        raise ConfigurationError("sigma must be a small positive number")
    nu = report.principal_dirs[0]
    used = float(sigma)
    attempts = 0
    for _ in range(10):
        attempts += 1
        p0 = p_star + used * nu
        if env.d0_many(p0[None, :])[0] > env.epsilon:
            break
        used *= 0.5
    else:
        raise ConfigurationError(
            "perturbed start never reached the free space")
    cfg = config if config is not None else SimConfig(dt=1e-3, t_max=20.0)
    ctl = AvoidanceController(env, target, gains)
    tr = simulate(env, ctl, p0, used * nu, cfg)
    disp = np.linalg.norm(tr.p - p_star, axis=1)
    w = gains.k_goal * disp**2 / 2.0 + np.sum(tr.v**2, axis=1) / 2.0
    return ProbeResult(escaped=bool(np.any(disp > 10.0 * used)),
                       sigma=used, attempts=attempts, trajectory=tr,
                       w=w, p_star=p_star.copy())


def metrics(traj):
    """Summarize one trajectory; see RunMetrics for field semantics."""
    steps = np.diff(traj.p, axis=0)
    path_length = float(np.linalg.norm(steps, axis=1).sum())
    finite = np.isfinite(traj.u).all(axis=1)
    if finite.any():
        peak_accel = float(np.linalg.norm(traj.u[finite], axis=1).max())
    else:
        peak_accel = float("nan")
    peak_speed = float(np.linalg.norm(traj.v, axis=1).max())
    min_clearance = float(traj.d.min() + traj.epsilon)
    err = np.linalg.norm(traj.p - traj.target, axis=1)
    inside = err < traj.pos_tol
    if inside[-1]:
        outside = np.where(~inside)[0]
        first = 0 if outside.size == 0 else int(outside[-1]) + 1
        settle_time = float(traj.t[first])
    else:
        settle_time = None
    return RunMetrics(path_length=path_length, peak_accel=peak_accel,
                      peak_speed=peak_speed, min_clearance=min_clearance,
                      settle_time=settle_time)

"""Simulated range sensor: exact first-hit ray casting over a scene.

Every boundary type has a closed-form or polyline ray intersection, so
scans are exact up to the spline chord tolerance rather than iterative.
A full fan plus the nearest-return estimator gives the controller its
clearance and normal when the true distance field is hidden.
"""

import weakref
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (
    Ball,
    BallWorkspace,
    BoxWorkspace,
    ConfigurationError,
    Ellipsoid,
    Environment,
    Spline2D,
    UnboundedWorkspace,
    _unit_sphere_samples,
)

__all__ = [
    "SensorConfig",
    "Scan",
    "ray_directions",
    "ray_cast",
    "cast_fan",
    "scan",
    "nearest_from_scan",
    "write_scan_csv",
]

_HIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SensorConfig:
    """Range sensor parameters; period is the refresh interval in seconds."""

    max_range: float
    ray_count: int = 720
    noise_stddev: float = 0.0
    period: float = 0.01

    def __post_init__(self):
        if not (np.isfinite(self.max_range) and self.max_range > 0):
            raise ConfigurationError("max_range must be positive")
        if int(self.ray_count) < 8:
            raise ConfigurationError("ray_count must be at least 8")
        object.__setattr__(self, "ray_count", int(self.ray_count))
        if not (np.isfinite(self.noise_stddev) and self.noise_stddev >= 0):
            raise ConfigurationError("noise_stddev must be nonnegative")
        if not (np.isfinite(self.period) and self.period > 0):
            raise ConfigurationError("period must be positive")


@dataclass(frozen=True, eq=False)
class Scan:
    """One sensor sweep; distances are NaN where nothing returned."""

    origin: np.ndarray
    directions: np.ndarray
    distances: np.ndarray
    max_range: float

    def points(self):
        """World-frame hit points for the rays that returned."""
        ok = np.isfinite(self.distances)
        return self.origin + self.distances[ok, None] * self.directions[ok]


def ray_directions(dim, count):
    """Deterministic unit directions: uniform fan in 2D, Fibonacci in 3D."""
    if dim == 2:
        th = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    return _unit_sphere_samples(dim, count)


# ---------------------------------------------------------------------------
# Exact per-boundary intersections


def _first_positive(t1, t2):
    t1 = np.where(t1 > _HIT_TOL, t1, np.inf)
    t2 = np.where(t2 > _HIT_TOL, t2, np.inf)
    return np.minimum(t1, t2)


def _hits_ball(center, radius, origin, dirs):
    b = origin - center
    ub = dirs @ b
    disc = ub * ub - (b @ b - radius * radius)
    root = np.sqrt(np.maximum(disc, 0.0))
    t = _first_positive(-ub - root, -ub + root)
    return np.where(disc >= 0.0, t, np.inf)


def _hits_ellipsoid(ell, origin, dirs):
    o = (origin - ell.center) @ ell.orientation / ell.semi_axes
    U = dirs @ ell.orientation / ell.semi_axes
    a = (U * U).sum(axis=1)
    b = U @ o
    c = o @ o - 1.0
    disc = b * b - a * c
    root = np.sqrt(np.maximum(disc, 0.0))
    t = _first_positive((-b - root) / a, (-b + root) / a)
    return np.where(disc >= 0.0, t, np.inf)


def _hits_box(lo, hi, origin, dirs):
    n = len(lo)
    best = np.full(len(dirs), np.inf)
    for axis in range(n):
        for bound in (lo[axis], hi[axis]):
            u = dirs[:, axis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (bound - origin[axis]) / u
                pt = origin[None, :] + t[:, None] * dirs
                inside = np.all((pt >= lo - 1e-9) & (pt <= hi + 1e-9), axis=1)
            ok = (t > _HIT_TOL) & inside & (np.abs(u) > 0)
            best = np.where(ok, np.minimum(best, np.where(ok, t, np.inf)), best)
    return best


def _segment_hits(A, D, origin, dirs, seg_idx, ray_idx, out):
    """Scatter-min ray/segment intersections into out (per ray)."""
    w = A[seg_idx] - origin
    d = D[seg_idx]
    u = dirs[ray_idx]
    q = u[:, 0] * d[:, 1] - u[:, 1] * d[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * d[:, 1] - w[:, 1] * d[:, 0]) / q
        s = (w[:, 0] * u[:, 1] - w[:, 1] * u[:, 0]) / q
    ok = (np.abs(q) > 1e-300) & (t > _HIT_TOL) & (s >= -1e-9) & (s <= 1 + 1e-9)
    np.minimum.at(out, ray_idx[ok], t[ok])


class _SceneRays:
    """Cached per-environment data for exact ray casting."""

    def __init__(self, env):
        self.analytic = []
        segs_a, segs_b = [], []
        for b in env._boundaries:
            if isinstance(b, Ball):
                self.analytic.append(("ball", (b.center, b.radius)))
            elif isinstance(b, BallWorkspace):
                self.analytic.append(("ball", (b.center, b.radius)))
            elif isinstance(b, Ellipsoid):
                self.analytic.append(("ellipsoid", b))
            elif isinstance(b, BoxWorkspace):
                self.analytic.append(("box", (b.lo, b.hi)))
            elif isinstance(b, Spline2D):
                pts = b._poly_pts
                segs_a.append(pts)
                segs_b.append(np.roll(pts, -1, axis=0))
            else:
                raise ConfigurationError(
                    f"no ray model for boundary type {type(b).__name__}")
        if segs_a:
            self.seg_a = np.vstack(segs_a)
            self.seg_d = np.vstack(segs_b) - self.seg_a
        else:
            self.seg_a = None

    def cast(self, origin, dirs):
        """First-hit distance per ray; np.inf where nothing is hit."""
        best = np.full(len(dirs), np.inf)
        for kind, data in self.analytic:
            if kind == "ball":
                t = _hits_ball(data[0], data[1], origin, dirs)
            elif kind == "ellipsoid":
                t = _hits_ellipsoid(data, origin, dirs)
            else:
                t = _hits_box(data[0], data[1], origin, dirs)
            best = np.minimum(best, t)
        if self.seg_a is not None:
            n_seg = len(self.seg_a)
            n_ray = len(dirs)
            seg_idx = np.repeat(np.arange(n_seg), n_ray)
            ray_idx = np.tile(np.arange(n_ray), n_seg)
            _segment_hits(self.seg_a, self.seg_d, origin, dirs,
                          seg_idx, ray_idx, best)
        return best

    def cast_fan_2d(self, origin, count):
        """Uniform full fan; spline segments are binned by ray angle."""
        dirs = ray_directions(2, count)
        best = np.full(count, np.inf)
        for kind, data in self.analytic:
            if kind == "ball":
                t = _hits_ball(data[0], data[1], origin, dirs)
            elif kind == "ellipsoid":
                t = _hits_ellipsoid(data, origin, dirs)
            else:
                t = _hits_box(data[0], data[1], origin, dirs)
            best = np.minimum(best, t)
        if self.seg_a is not None:
            step = 2.0 * np.pi / count
            va = self.seg_a - origin
            vb = va + self.seg_d
            ta = np.arctan2(va[:, 1], va[:, 0])
            span = np.arctan2(vb[:, 1], vb[:, 0]) - ta
            span = (span + np.pi) % (2.0 * np.pi) - np.pi
            lo_ang = ta + np.minimum(span, 0.0)
            hi_ang = ta + np.maximum(span, 0.0)
            k_lo = np.ceil(lo_ang / step - 1e-12).astype(np.int64)
            counts = np.maximum(
                0, np.floor(hi_ang / step + 1e-12).astype(np.int64) - k_lo + 1)
            total = int(counts.sum())
            if total:
                seg_idx = np.repeat(np.arange(len(counts)), counts)
                starts = np.repeat(np.cumsum(counts) - counts, counts)
                ray_idx = (np.repeat(k_lo, counts)
                           + np.arange(total) - starts) % count
                _segment_hits(self.seg_a, self.seg_d, origin, dirs,
                              seg_idx, ray_idx, best)
        return dirs, best


_scene_cache = weakref.WeakKeyDictionary()


def _scene(env):
    scene = _scene_cache.get(env)
    if scene is None:
        scene = _SceneRays(env)
        _scene_cache[env] = scene
    return scene


def ray_cast(env, origin, direction):
    """Exact distance along one ray to the nearest boundary (inf if none)."""
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    return float(_scene(env).cast(origin, direction[None, :])[0])


def cast_fan(env, origin, directions):
    """Exact distances for an arbitrary direction set (rows unit length)."""
    origin = np.asarray(origin, dtype=float)
    return _scene(env).cast(origin, np.asarray(directions, dtype=float))


def scan(env, position, config, rng=None):
    """One sensor sweep from position; noisy when the config says so."""
    position = np.asarray(position, dtype=float)
    scene = _scene(env)
    if env.dim == 2:
        dirs, dist = scene.cast_fan_2d(position, config.ray_count)
    else:
        dirs = ray_directions(env.dim, config.ray_count)
        dist = scene.cast(position, dirs)
    returned = dist <= config.max_range
    out = np.where(returned, dist, np.nan)
    if config.noise_stddev > 0.0:
        if rng is None:
            raise ConfigurationError("noisy sensor needs a random generator")
        noise = config.noise_stddev * rng.standard_normal(config.ray_count)
        out[returned] = np.clip(out[returned] + noise[returned],
                                _HIT_TOL, config.max_range)
    return Scan(origin=position, directions=dirs, distances=out,
                max_range=float(config.max_range))


_neighbor_cache = {}


def _smooth_returns(scan_obj):
    """Average each ray with its angular neighbours (center weight 2).

    Softens the low bias of taking a minimum over many noisy returns;
    rays without a return enter as max_range, a lower bound on their
    true distance.
    """
    dist = np.where(np.isfinite(scan_obj.distances),
                    scan_obj.distances, scan_obj.max_range)
    count, dim = scan_obj.directions.shape
    k = 3 if dim == 2 else 7
    key = (dim, count, k)
    nbr = _neighbor_cache.get(key)
    if nbr is None:
        _, nbr = cKDTree(scan_obj.directions).query(scan_obj.directions, k=k)
        _neighbor_cache[key] = nbr
    smooth = (2.0 * dist + dist[nbr[:, 1:]].sum(axis=1)) / (k + 1.0)
    return smooth


def nearest_from_scan(scan_obj):
    """Estimate (clearance, outward normal) from a sweep.

    Returns None when no ray produced a return. The normal estimate
    points from the nearest boundary point toward the sensor.
    """
    if not np.isfinite(scan_obj.distances).any():
        return None
    smooth = _smooth_returns(scan_obj)
    j = int(np.argmin(smooth))
    count, dim = scan_obj.directions.shape
    if dim != 2:
        return float(smooth[j]), -scan_obj.directions[j]
    # Parabolic vertex through the minimum and its two fan neighbours.
    s_prev = smooth[(j - 1) % count]
    s_next = smooth[(j + 1) % count]
    denom = s_prev + s_next - 2.0 * smooth[j]
    if denom > 1e-300:
        shift = 0.5 * (s_prev - s_next) / denom
        shift = float(np.clip(shift, -0.5, 0.5))
        value = smooth[j] - 0.125 * (s_next - s_prev) ** 2 / denom
    else:
        shift = 0.0
        value = smooth[j]
    th = 2.0 * np.pi * (j + shift) / count
    eta = -np.array([np.cos(th), np.sin(th)])
    return float(max(value, _HIT_TOL)), eta


def write_scan_csv(scan_obj, path):
    """Dump a sweep as CSV: ray index, direction components, distance."""
    count, dim = scan_obj.directions.shape
    header = "ray," + ",".join(f"u{i + 1}" for i in range(dim)) + ",distance"
    rows = np.column_stack([np.arange(count), scan_obj.directions,
                            scan_obj.distances])
    fmt = ["%d"] + ["%.17g"] * (dim + 1)
    np.savetxt(path, rows, fmt=fmt, delimiter=",", header=header, comments="")

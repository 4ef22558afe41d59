"""Oriented distance fields for obstacle unions inside a workspace.

Free space is the workspace minus the union of obstacle interiors.  All
queries are phrased through the oriented distance d0 to the obstacle
region (the workspace complement counts as the outer obstacle): d0 is
positive in free space, zero on the boundary, negative inside an
obstacle.  The controller-facing clearance is d = d0 - epsilon where
epsilon is the inflation margin absorbing the robot body.

Obstacle shapes provide a vectorised signed distance plus nearest
boundary point ("foot"); the environment takes the minimum across
shapes.  The unit normal eta = grad d0 = (p - foot) / d0 and, where a
closed form exists, the field Hessian are exposed through query().
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree


class ConfigurationError(ValueError):
    """Invalid shape, environment, or query input."""


class NonUniqueProjectionError(RuntimeError):
    """Point lies (numerically) on the skeleton: two distinct nearest
    boundary points at indistinguishable distances."""


class SafetyViolationError(RuntimeError):
    """An operation that requires positive clearance saw d <= 0."""

    def __init__(self, message, time=None, stage=None):
        super().__init__(message)
        self.time = time
        self.stage = stage


# Two candidate feet closer in distance than DIST_TIE but further apart
# than FOOT_TOL mean the query point sits on the skeleton.
DIST_TIE = 1e-9
FOOT_TOL = 1e-6
# Central-difference step for Hessians of shapes without a closed form.
HESSIAN_FD_STEP = 1e-5


def _as_vector(x, dim=None, name="vector"):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ConfigurationError(f"{name} must be a 1-d array, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ConfigurationError(f"{name} must have dimension {dim}, got {v.shape[0]}")
    if v.shape[0] < 2:
        raise ConfigurationError(f"{name} must have dimension >= 2")
    if not np.all(np.isfinite(v)):
        raise ConfigurationError(f"{name} must be finite")
    return v


def _as_points(P, dim):
    A = np.asarray(P, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2 or A.shape[1] != dim:
        raise ConfigurationError(f"expected points of shape (m, {dim}), got {A.shape}")
    return A


def _unit_sphere_samples(dim, count, seed=0):
    """Deterministic, roughly uniform unit directions."""
    if dim == 2:
        ang = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if dim == 3:
        # Fibonacci sphere.
        k = np.arange(count, dtype=float)
        phi = math.pi * (3.0 - math.sqrt(5.0)) * k
        z = 1.0 - (2.0 * k + 1.0) / count
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(count, dim))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# Obstacles


@dataclass(frozen=True, eq=False)
class Ball:
    """Solid ball obstacle."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, name="center"))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ConfigurationError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def dist_foot(self, P):
        delta = P - self.center
        r = np.linalg.norm(delta, axis=1)
        d = r - self.radius
        # At the exact center the foot direction is arbitrary; pick axis 0.
        safe = r > 0
        u = np.zeros_like(delta)
        u[safe] = delta[safe] / r[safe, None]
        u[~safe, 0] = 1.0
        foot = self.center + self.radius * u
        return d, foot

    def candidates(self, p):
        d, foot = self.dist_foot(p[None, :])
        return [(float(d[0]), foot[0], None)]

    def hessian(self, p, foot, meta):
        delta = p - self.center
        r = np.linalg.norm(delta)
        if r == 0.0:
            return None
        u = delta / r
        return (np.eye(self.dim) - np.outer(u, u)) / r

    def boundary_samples(self, count):
        dirs = _unit_sphere_samples(self.dim, count)
        return self.center + self.radius * dirs

    def boundary_curve(self, count):
        """Ordered closed boundary polyline with outward normals (2-d only)."""
        dirs = _unit_sphere_samples(2, count)
        return self.center + self.radius * dirs, dirs


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Solid ellipsoid; orientation columns are the semi-axis directions."""

    center: np.ndarray
    semi_axes: np.ndarray
    orientation: np.ndarray | None = None

    def __post_init__(self):
        c = _as_vector(self.center, name="center")
        a = np.asarray(self.semi_axes, dtype=float)
        if a.shape != c.shape or not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ConfigurationError("semi_axes must be positive and match center dimension")
        n = c.shape[0]
        R = np.eye(n) if self.orientation is None else np.asarray(self.orientation, dtype=float)
        if R.shape != (n, n) or not np.allclose(R.T @ R, np.eye(n), atol=1e-9):
            raise ConfigurationError("orientation must be an orthonormal matrix")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "semi_axes", a)
        object.__setattr__(self, "orientation", R)

    @property
    def dim(self):
        return self.center.shape[0]

    def _to_frame(self, P):
        return (P - self.center) @ self.orientation

    def _to_world(self, Q):
        return Q @ self.orientation.T + self.center

    def dist_foot(self, P):
        """Signed distance and nearest boundary point, vectorised.

        Projection solves the single-variable Lagrange root: the foot in
        the body frame is q_i = y_i a_i^2 / (a_i^2 + t) where t is the
        unique root of f(t) = sum q_i^2 / a_i^2 - 1 on (-a_min^2, inf).
        f is convex and decreasing there, so Newton started at any point
        with f >= 0 converges monotonically.
        """
        Y = self._to_frame(P)
        a2 = self.semi_axes**2
        Y2 = Y * Y
        f0 = (Y2 / a2).sum(axis=1) - 1.0
        outside = f0 > 0.0
        m = Y.shape[0]

        t = np.zeros(m)
        # Outside points: f(t) >= sum(y^2 a^2)/(t + a_max^2)^2 - 1, so the
        # seed below keeps f(t0) >= 0 and Newton stays monotone.
        if outside.any():
            t[outside] = np.maximum(
                0.0, np.sqrt((Y2[outside] * a2).sum(axis=1)) - a2.max())
        # Inside points start just right of the pole at -a_min^2.
        a_min2 = a2.min()
        t[~outside] = -a_min2 * (1.0 - 1e-12)

        def f_and_fp(tv, rows):
            den = a2[None, :] + tv[:, None]
            w = Y2[rows] * a2 / den**2
            return w.sum(axis=1) - 1.0, -2.0 * (w / den).sum(axis=1)

        if outside.any():
            # Two Newton steps on h(t) = (f+1)^(-1/2) - 1, which is nearly
            # linear in t, put the iterate within a few plain steps of the
            # root; the plain loop below then certifies convergence.
            to = t[outside]
            for _ in range(2):
                fo, fpo = f_and_fp(to, outside)
                g = fo + 1.0
                to = to + 2.0 * (g - g * np.sqrt(g)) / fpo
            t[outside] = to

        fv, fp = f_and_fp(t, slice(None))
        fallback = ~np.isfinite(fv) | ((fv < -1e-12) & ~outside)
        active = ~fallback
        for _ in range(100):
            if not active.any():
                break
            t[active] = t[active] - fv[active] / fp[active]
            fa, fpa = f_and_fp(t[active], active)
            fv[active] = fa
            fp[active] = fpa
            active = active & (np.abs(fv) > 1e-13)
        fallback |= active  # non-converged rows take the sampling path
        den = a2[None, :] + t[:, None]
        Q = Y * a2 / den

        if fallback.any():
            # Dense-sampling fallback for degenerate interior points
            # (on or near the medial axis of the ellipsoid).
            dirs = _unit_sphere_samples(self.dim, 4096)
            surf = dirs * self.semi_axes
            for i in np.where(fallback)[0]:
                j = np.argmin(((surf - Y[i]) ** 2).sum(axis=1))
                Q[i] = surf[j]

        foot = self._to_world(Q)
        dist = np.linalg.norm(P - foot, axis=1)
        sign = np.where(f0 >= 0.0, 1.0, -1.0)
        return sign * dist, foot

    def candidates(self, p):
        d, foot = self.dist_foot(p[None, :])
        return [(float(d[0]), foot[0], None)]

    def hessian(self, p, foot, meta):
        """Distance-field Hessian from the boundary shape operator.

        With principal curvatures kappa_i at the foot, the field Hessian
        at distance s has eigenvalues kappa_i / (1 + s kappa_i) along the
        principal directions and 0 along the normal.
        """
        q = self._to_frame(foot[None, :])[0]
        a2 = self.semi_axes**2
        g = q / a2
        gn = np.linalg.norm(g)
        if gn == 0.0:
            return None
        nu = g / gn
        n = self.dim
        Pt = np.eye(n) - np.outer(nu, nu)
        W = Pt @ np.diag(1.0 / a2) @ Pt / gn
        vals, vecs = np.linalg.eigh(W)
        s = float(np.linalg.norm(p - foot))
        H = np.zeros((n, n))
        for k in range(n):
            if vals[k] > 1e-12:
                lam = vals[k] / (1.0 + s * vals[k])
                H += lam * np.outer(vecs[:, k], vecs[:, k])
        return self.orientation @ H @ self.orientation.T

    def boundary_samples(self, count):
        dirs = _unit_sphere_samples(self.dim, count)
        q = dirs * self.semi_axes
        return self._to_world(q)

    def boundary_curve(self, count):
        ang = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        q = np.column_stack([self.semi_axes[0] * np.cos(ang), self.semi_axes[1] * np.sin(ang)])
        pts = self._to_world(q)
        g = q / self.semi_axes**2
        g = g / np.linalg.norm(g, axis=1, keepdims=True)
        normals = g @ self.orientation.T
        return pts, normals


def _polygon_is_simple(pts):
    """Check a closed polygon for self-intersection, O(K^2)."""
    K = len(pts)
    segs = [(pts[i], pts[(i + 1) % K]) for i in range(K)]

    def crosses(s1, s2):
        (a, b), (c, d) = s1, s2
        r = b - a
        s = d - c
        denom = r[0] * s[1] - r[1] * s[0]
        if abs(denom) < 1e-15:
            return False
        t = ((c - a)[0] * s[1] - (c - a)[1] * s[0]) / denom
        u = ((c - a)[0] * r[1] - (c - a)[1] * r[0]) / denom
        return 1e-12 < t < 1.0 - 1e-12 and 1e-12 < u < 1.0 - 1e-12

    for i in range(K):
        for j in range(i + 2, K):
            if i == 0 and j == K - 1:
                continue
            if crosses(segs[i], segs[j]):
                return False
    return True


class Spline2D:
    """Closed C2 cubic-spline obstacle through 2-d control points.

    Distance queries use an adaptive polyline (chord error below
    chord_tol) to bracket the nearest point, then Newton refinement on
    the curve parameter.  The sign comes from the outward normal at the
    refined foot.
    """

    def __init__(self, control_points, chord_tol=1e-6):
        pts = np.asarray(control_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
            raise ConfigurationError("spline needs at least 4 control points of dimension 2")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("spline control points must be finite")
        if np.linalg.norm(pts[0] - pts[-1]) < 1e-12:
            pts = pts[:-1]
        if not _polygon_is_simple(pts):
            raise ConfigurationError("spline control polygon must be a simple closed curve")
        self.control_points = pts
        K = pts.shape[0]
        self._period = float(K)
        knots = np.arange(K + 1, dtype=float)
        wrapped = np.vstack([pts, pts[:1]])
        sp = CubicSpline(knots, wrapped, bc_type="periodic", axis=0)
        # Per-interval coefficients for fast vectorised evaluation:
        # shape (4, K, 2), highest power first.
        self._coef = sp.c
        poly = self._adaptive_polyline(chord_tol)
        self._poly_u, self._poly_pts = poly
        area = 0.5 * np.sum(
            self._poly_pts[:, 0] * np.roll(self._poly_pts[:, 1], -1)
            - np.roll(self._poly_pts[:, 0], -1) * self._poly_pts[:, 1]
        )
        if abs(area) < 1e-12:
            raise ConfigurationError("degenerate spline (zero enclosed area)")
        self._ccw = area > 0
        self._tree = cKDTree(self._poly_pts, leafsize=64,
                             balanced_tree=False, compact_nodes=False)
        self._max_gap = float(np.max(np.diff(np.concatenate([self._poly_u, [self._period]]))))

    @property
    def dim(self):
        return 2

    def _eval(self, u, order=0):
        u = np.mod(np.asarray(u, dtype=float), self._period)
        i = np.minimum(u.astype(int), int(self._period) - 1)
        s = u - i
        c0, c1, c2, c3 = (self._coef[k, i, :] for k in range(4))
        s = s[..., None]
        if order == 0:
            return ((c0 * s + c1) * s + c2) * s + c3
        if order == 1:
            return (3.0 * c0 * s + 2.0 * c1) * s + c2
        return 6.0 * c0 * s + 2.0 * c1

    def point(self, u):
        return self._eval(np.atleast_1d(u))

    def outward_normal(self, u):
        t = self._eval(np.atleast_1d(u), order=1)
        t = t / np.linalg.norm(t, axis=1, keepdims=True)
        if self._ccw:
            return np.column_stack([t[:, 1], -t[:, 0]])
        return np.column_stack([-t[:, 1], t[:, 0]])

    def _adaptive_polyline(self, tol):
        u = np.linspace(0.0, self._period, 8 * len(self.control_points) + 1)
        for _ in range(14):
            pts = self._eval(u)
            mid_u = 0.5 * (u[:-1] + u[1:])
            mid = self._eval(mid_u)
            chord = 0.5 * (pts[:-1] + pts[1:])
            err = np.linalg.norm(mid - chord, axis=1)
            bad = err > tol
            if not bad.any() or len(u) > 200_000:
                break
            u = np.sort(np.concatenate([u, mid_u[bad]]))
        return u[:-1], self._eval(u[:-1])

    def _refine(self, P, u0, iters=6):
        """Newton on F(u) = (p - C(u)) . C'(u) = 0, clamped near the seed."""
        u = u0.copy()
        lim = 2.0 * self._max_gap
        for _ in range(iters):
            C = self._eval(u)
            C1 = self._eval(u, order=1)
            C2 = self._eval(u, order=2)
            r = P - C
            F = (r * C1).sum(axis=1)
            Fp = -(C1 * C1).sum(axis=1) + (r * C2).sum(axis=1)
            step = np.where(np.abs(Fp) > 1e-14, F / Fp, 0.0)
            u = u - np.clip(step, -lim, lim)
        return u

    def dist_foot(self, P):
        _, idx = self._tree.query(P)
        u = self._refine(P, self._poly_u[idx])
        foot = self._eval(u)
        vec = P - foot
        dist = np.linalg.norm(vec, axis=1)
        nrm = self.outward_normal(u)
        sign = np.where((vec * nrm).sum(axis=1) >= 0.0, 1.0, -1.0)
        return sign * dist, foot

    def candidates(self, p):
        k = min(16, len(self._poly_pts))
        _, idx = self._tree.query(p[None, :], k=k)
        seeds = self._poly_u[idx[0]]
        u = self._refine(np.repeat(p[None, :], k, axis=0), seeds)
        u = np.mod(u, self._period)
        feet = self._eval(u)
        vec = p[None, :] - feet
        dist = np.linalg.norm(vec, axis=1)
        nrm = self.outward_normal(u)
        sign = np.where((vec * nrm).sum(axis=1) >= 0.0, 1.0, -1.0)
        out = []
        for j in range(k):
            dup = False
            for dj, fj, uj in out:
                wrap = min(abs(u[j] - uj), self._period - abs(u[j] - uj))
                if wrap < 1e-5 or np.linalg.norm(feet[j] - fj) < 1e-9:
                    dup = True
                    break
            if not dup:
                out.append((float(sign[j] * dist[j]), feet[j], float(u[j])))
        out.sort(key=lambda c: abs(c[0]))
        return out

    def hessian(self, p, foot, meta):
        return None  # finite differences at the environment level

    def boundary_samples(self, count):
        step = max(1, len(self._poly_pts) // count)
        return self._poly_pts[::step]

    def boundary_curve(self, count):
        u = np.linspace(0.0, self._period, count, endpoint=False)
        return self._eval(u), self.outward_normal(u)


class _SplineGroup:
    """Flat segment table over all spline obstacles of an environment.

    One KD-tree spans every polyline vertex; Newton refinement gathers
    per-segment cubic coefficients, so the whole group costs a single
    vectorised pass per distance call.  Diagnostic paths still use the
    per-obstacle methods.
    """

    def __init__(self, splines):
        coefs, nxt, prv, signs = [], [], [], []
        pts, seg_ids, s_vals = [], [], []
        base = 0
        for sp in splines:
            K = int(sp._period)
            coefs.append(sp._coef)
            idx = np.arange(K)
            nxt.append(base + (idx + 1) % K)
            prv.append(base + (idx - 1) % K)
            signs.append(np.full(K, 1.0 if sp._ccw else -1.0))
            seg = np.minimum(sp._poly_u.astype(int), K - 1)
            pts.append(sp._poly_pts)
            seg_ids.append(base + seg)
            s_vals.append(sp._poly_u - seg)
            base += K
        self._coef = np.concatenate(coefs, axis=1)
        self._next = np.concatenate(nxt)
        self._prev = np.concatenate(prv)
        self._sign = np.concatenate(signs)
        self._tree = cKDTree(np.vstack(pts), leafsize=64,
                             balanced_tree=False, compact_nodes=False)
        self._tree_seg = np.concatenate(seg_ids)
        self._tree_s = np.concatenate(s_vals)

    def _eval_all(self, seg, s):
        c0 = self._coef[0, seg]
        c1 = self._coef[1, seg]
        c2 = self._coef[2, seg]
        c3 = self._coef[3, seg]
        ss = s[:, None]
        C = ((c0 * ss + c1) * ss + c2) * ss + c3
        C1 = (3.0 * c0 * ss + 2.0 * c1) * ss + c2
        C2 = 6.0 * c0 * ss + 2.0 * c1
        return C, C1, C2

    def dist_foot(self, P):
        _, idx = self._tree.query(P)
        seg = self._tree_seg[idx].copy()
        s = self._tree_s[idx].copy()
        for _ in range(3):
            C, C1, C2 = self._eval_all(seg, s)
            r = P - C
            F = (r * C1).sum(axis=1)
            Fp = -(C1 * C1).sum(axis=1) + (r * C2).sum(axis=1)
            s = s - np.clip(np.where(np.abs(Fp) > 1e-14, F / Fp, 0.0), -1.5, 1.5)
            if ((s < 0.0) | (s >= 1.0)).any():
                jump = np.floor(s).astype(int)
                s = s - jump
                for _ in range(2):
                    fwd = jump > 0
                    if fwd.any():
                        seg[fwd] = self._next[seg[fwd]]
                        jump[fwd] -= 1
                    bwd = jump < 0
                    if bwd.any():
                        seg[bwd] = self._prev[seg[bwd]]
                        jump[bwd] += 1
        C, C1, _ = self._eval_all(seg, s)
        vec = P - C
        dist = np.linalg.norm(vec, axis=1)
        tn = C1 / np.linalg.norm(C1, axis=1, keepdims=True)
        n_out = np.column_stack([tn[:, 1], -tn[:, 0]]) * self._sign[seg, None]
        d = np.where((vec * n_out).sum(axis=1) >= 0.0, dist, -dist)
        return d, C


# ---------------------------------------------------------------------------
# Workspaces (their complement acts as the outer obstacle)


@dataclass(frozen=True, eq=False)
class BoxWorkspace:
    """Axis-aligned box workspace."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo, name="lo")
        hi = _as_vector(self.hi, dim=lo.shape[0], name="hi")
        if np.any(hi <= lo):
            raise ConfigurationError("box workspace needs hi > lo componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def dist_foot(self, P):
        """Signed distance to the workspace complement: positive inside."""
        m_lo = P - self.lo
        m_hi = self.hi - P
        margins = np.concatenate([m_lo, m_hi], axis=1)
        inside = np.all(margins > 0.0, axis=1)
        d = margins.min(axis=1)
        foot = P.copy()
        k = margins.argmin(axis=1)
        n = self.dim
        rows = np.arange(P.shape[0])
        axis = np.where(k < n, k, k - n)
        val = np.where(k < n, self.lo[axis], self.hi[axis])
        foot[rows, axis] = val
        out = ~inside
        if out.any():
            clamped = np.clip(P[out], self.lo, self.hi)
            foot[out] = clamped
            d[out] = -np.linalg.norm(P[out] - clamped, axis=1)
        return d, foot

    def candidates(self, p):
        m_lo = p - self.lo
        m_hi = self.hi - p
        margins = np.concatenate([m_lo, m_hi])
        cands = []
        n = self.dim
        for k in np.argsort(margins)[:3]:
            foot = p.copy()
            axis = k if k < n else k - n
            foot[axis] = self.lo[axis] if k < n else self.hi[axis]
            cands.append((float(margins[k]), foot, int(k)))
        return cands

    def hessian(self, p, foot, meta):
        return np.zeros((self.dim, self.dim))

    def boundary_samples(self, count):
        n = self.dim
        per_face = max(2, int(round((count / (2 * n)) ** (1.0 / max(1, n - 1)))))
        axes = [np.linspace(self.lo[i], self.hi[i], per_face) for i in range(n)]
        pts = []
        for axis in range(n):
            grid_axes = [axes[i] for i in range(n) if i != axis]
            mesh = np.meshgrid(*grid_axes, indexing="ij")
            flat = np.column_stack([g.ravel() for g in mesh])
            for val in (self.lo[axis], self.hi[axis]):
                face = np.insert(flat, axis, val, axis=1)
                pts.append(face)
        return np.vstack(pts)


@dataclass(frozen=True, eq=False)
class BallWorkspace:
    """Ball-shaped workspace."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, name="center"))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ConfigurationError("workspace radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def dist_foot(self, P):
        delta = P - self.center
        r = np.linalg.norm(delta, axis=1)
        d = self.radius - r
        safe = r > 0
        u = np.zeros_like(delta)
        u[safe] = delta[safe] / r[safe, None]
        u[~safe, 0] = 1.0
        foot = self.center + self.radius * u
        return d, foot

    def candidates(self, p):
        d, foot = self.dist_foot(p[None, :])
        return [(float(d[0]), foot[0], None)]

    def hessian(self, p, foot, meta):
        delta = p - self.center
        r = np.linalg.norm(delta)
        if r == 0.0:
            return None
        u = delta / r
        return -(np.eye(self.dim) - np.outer(u, u)) / r

    def boundary_samples(self, count):
        dirs = _unit_sphere_samples(self.dim, count)
        return self.center + self.radius * dirs


class UnboundedWorkspace:
    """All of R^n; permitted only with at least one inner obstacle."""

    def __init__(self, dim):
        if dim < 2:
            raise ConfigurationError("dimension must be >= 2")
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim


# ---------------------------------------------------------------------------
# Environment and queries


@dataclass(frozen=True, eq=False)
class DistanceQuery:
    """Full local description of the obstacle distance field at a point."""

    d0: float
    d: float
    eta: np.ndarray
    hessian: np.ndarray | None
    foot: np.ndarray


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = []
        for c in self.checks:
            lines.append(f"[{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        return "\n".join(lines)


class Environment:
    """Workspace plus obstacles plus safety margins.  Immutable.

    epsilon inflates every obstacle (and the workspace wall) to absorb
    the robot body of radius robot_radius; the controller sees the
    shifted clearance d = d0 - epsilon.  reach_bound / regularity_bound
    are declared properties of the free space (not computed); when
    present they participate in validate_environment().
    """

    def __init__(self, workspace, obstacles, epsilon, robot_radius,
                 reach_bound=None, regularity_bound=None):
        obstacles = tuple(obstacles)
        dim = workspace.dim
        for ob in obstacles:
            if ob.dim != dim:
                raise ConfigurationError("obstacle dimension does not match workspace")
        if isinstance(workspace, UnboundedWorkspace) and not obstacles:
            raise ConfigurationError("unbounded workspace requires at least one obstacle")
        if not (np.isfinite(epsilon) and epsilon > 0):
            raise ConfigurationError("epsilon must be positive")
        if not (np.isfinite(robot_radius) and robot_radius > 0):
            raise ConfigurationError("robot_radius must be positive")
        for b, nm in ((reach_bound, "reach_bound"), (regularity_bound, "regularity_bound")):
            if b is not None and not (np.isfinite(b) and b > 0):
                raise ConfigurationError(f"{nm} must be positive when declared")
        self.workspace = workspace
        self.obstacles = obstacles
        self.epsilon = float(epsilon)
        self.robot_radius = float(robot_radius)
        self.reach_bound = None if reach_bound is None else float(reach_bound)
        self.regularity_bound = None if regularity_bound is None else float(regularity_bound)
        self._dim = dim
        shells = [] if isinstance(workspace, UnboundedWorkspace) else [workspace]
        self._boundaries = tuple(shells) + obstacles
        splines = [ob for ob in obstacles if isinstance(ob, Spline2D)]
        self._spline_group = _SplineGroup(splines) if splines else None
        balls = [ob for ob in obstacles if type(ob) is Ball]
        if balls:
            self._ball_centers = np.array([b.center for b in balls])
            self._ball_radii = np.array([b.radius for b in balls])
        else:
            self._ball_centers = None
        self._fast_boundaries = tuple(
            b for b in self._boundaries
            if not isinstance(b, Spline2D) and not (type(b) is Ball))

    @property
    def dim(self):
        return self._dim

    def _dist_foot_all(self, P):
        """Minimum oriented distance and its foot point over every boundary."""
        m = P.shape[0]
        best_d = np.full(m, np.inf)
        best_foot = np.zeros_like(P)
        sources = [b.dist_foot(P) for b in self._fast_boundaries]
        if self._ball_centers is not None:
            # All balls in one pass; nearest ball per query point.
            diff = P[:, None, :] - self._ball_centers[None, :, :]
            rad = np.linalg.norm(diff, axis=2)
            j = np.argmin(rad - self._ball_radii, axis=1)
            rows = np.arange(m)
            rj = rad[rows, j]
            u = diff[rows, j]
            safe = rj > 0
            u[safe] /= rj[safe, None]
            u[~safe, 0] = 1.0
            sources.append((
                rj - self._ball_radii[j],
                self._ball_centers[j] + self._ball_radii[j, None] * u))
        if self._spline_group is not None:
            sources.append(self._spline_group.dist_foot(P))
        for db, fb in sources:
            take = db < best_d
            best_d[take] = db[take]
            best_foot[take] = fb[take]
        return best_d, best_foot

    def d0_many(self, P):
        """Oriented distance to the obstacle region for (m, n) points."""
        P = _as_points(P, self._dim)
        return self._dist_foot_all(P)[0]

    def d0_eta_many(self, P):
        """Oriented distance and unit normal, vectorised.

        eta rows are zero where the distance vanishes (normal undefined).
        """
        P = _as_points(P, self._dim)
        best_d, best_foot = self._dist_foot_all(P)
        eta = np.zeros_like(P)
        nz = np.abs(best_d) > 1e-300
        eta[nz] = (P[nz] - best_foot[nz]) / best_d[nz, None]
        return best_d, eta

    def _all_candidates(self, p):
        cands = []
        for b in self._boundaries:
            for d, foot, meta in b.candidates(p):
                cands.append((d, foot, b, meta))
        cands.sort(key=lambda c: c[0])
        return cands

    def _boundary_eta(self, b, P):
        db, fb = b.dist_foot(P)
        eta = np.zeros_like(P)
        nz = np.abs(db) > 1e-300
        eta[nz] = (P[nz] - fb[nz]) / db[nz, None]
        return eta


def _best_candidate(env, p, ambiguity_check=True):
    p = _as_vector(p, dim=env.dim, name="p")
    if not isinstance(env.workspace, UnboundedWorkspace):
        d_shell, _ = env.workspace.dist_foot(p[None, :])
        if d_shell[0] < 0.0:
            raise ConfigurationError("point lies outside the workspace closure")
    cands = env._all_candidates(p)
    if not cands:
        raise ConfigurationError("environment has no boundaries to project onto")
    d, foot, b, meta = cands[0]
    if ambiguity_check and len(cands) > 1:
        d2, foot2 = cands[1][0], cands[1][1]
        if abs(d2 - d) < DIST_TIE and np.linalg.norm(foot2 - foot) > FOOT_TOL:
            raise NonUniqueProjectionError(
                f"two nearest boundary points at distance {d:.12g}: "
                f"{foot} and {foot2}"
            )
    return d, foot, b, meta


def distance(env, p):
    """Oriented distance from p to the obstacle region (d0).

    Positive in free space, zero on the boundary, negative inside an
    obstacle.  p must lie in the workspace closure.
    """
    p = _as_vector(p, dim=env.dim, name="p")
    if not isinstance(env.workspace, UnboundedWorkspace):
        d_shell, _ = env.workspace.dist_foot(p[None, :])
        if d_shell[0] < 0.0:
            raise ConfigurationError("point lies outside the workspace closure")
    return float(env.d0_many(p[None, :])[0])


def query(env, p, with_hessian=True):
    """Local field description: d0, d = d0 - epsilon, eta, Hessian, foot.

    Requires positive d0 (free-space interior) and a unique projection.
    The Hessian is analytic where the shape provides one and central
    finite differences on eta otherwise.
    """
    d0, foot, b, meta = _best_candidate(env, p)
    if d0 <= 0.0:
        raise SafetyViolationError(f"query at non-positive clearance d0 = {d0:.6g}")
    p = np.asarray(p, dtype=float)
    eta = (p - foot) / d0
    H = None
    if with_hessian:
        H = b.hessian(p, foot, meta)
        if H is None:
            H = _fd_hessian(env, b, p)
    return DistanceQuery(d0=float(d0), d=float(d0 - env.epsilon), eta=eta,
                         hessian=H, foot=foot)


def _fd_hessian(env, b, p, step=HESSIAN_FD_STEP):
    """Central differences of the single-boundary normal field."""
    n = p.shape[0]
    H = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        ep = env._boundary_eta(b, (p + e)[None, :])[0]
        em = env._boundary_eta(b, (p - e)[None, :])[0]
        H[:, j] = (ep - em) / (2.0 * step)
    return 0.5 * (H + H.T)


def project_boundary(env, p):
    """Nearest point on the obstacle-region boundary."""
    d0, foot, _, _ = _best_candidate(env, p)
    if d0 <= 0.0:
        raise SafetyViolationError(f"projection from non-positive clearance d0 = {d0:.6g}")
    return foot


def _pairwise_gap(b1, b2, count=512):
    """Sampled surrogate for the gap between two boundary sets."""
    s1 = b1.boundary_samples(count)
    d, _ = b2.dist_foot(s1)
    g1 = float(d.min())
    s2 = b2.boundary_samples(count)
    d, _ = b1.dist_foot(s2)
    return min(g1, float(d.min()))


def validate_environment(env):
    """Feasibility report: margins, clearances, projection uniqueness.

    Pairwise separation uses a sampled surrogate (boundary samples of one
    set against the signed distance of the other); reach/regularity
    bounds are declared inputs, checked only for consistency.
    """
    checks = []
    eps = env.epsilon

    ok = 0.0 < env.robot_radius < eps
    checks.append(ValidationCheck(
        "robot_radius_margin", ok,
        f"robot_radius {env.robot_radius} vs epsilon {eps} (need 0 < R < eps)"))

    if env.reach_bound is not None or env.regularity_bound is not None:
        bounds = [b for b in (env.reach_bound, env.regularity_bound) if b is not None]
        lim = min(bounds)
        ok = eps < lim
        checks.append(ValidationCheck(
            "declared_bounds", ok,
            f"epsilon {eps} vs min(reach, regularity) {lim} (need eps < bound)"))
    else:
        checks.append(ValidationCheck(
            "declared_bounds", True, "no reach/regularity bounds declared; skipped"))

    if isinstance(env.workspace, UnboundedWorkspace):
        checks.append(ValidationCheck(
            "unbounded_workspace", len(env.obstacles) > 0,
            "unbounded workspace requires at least one obstacle"))

    names = []
    if not isinstance(env.workspace, UnboundedWorkspace):
        names.append("workspace_wall")
    names += [f"obstacle_{i}" for i in range(len(env.obstacles))]
    bounds_list = list(env._boundaries)
    min_gap = math.inf
    worst = None
    for i in range(len(bounds_list)):
        for j in range(i + 1, len(bounds_list)):
            g = _pairwise_gap(bounds_list[i], bounds_list[j])
            if g < min_gap:
                min_gap = g
                worst = (names[i], names[j])
    if worst is None:
        checks.append(ValidationCheck(
            "pairwise_clearance", True, "fewer than two boundaries; skipped"))
    else:
        ok = min_gap > 2.0 * eps
        checks.append(ValidationCheck(
            "pairwise_clearance", ok,
            f"min sampled gap {min_gap:.4g} between {worst[0]} and {worst[1]} "
            f"(need > 2 eps = {2.0 * eps:.4g})"))

    ambiguous = 0
    probed = 0
    for ob in env.obstacles:
        samples = ob.boundary_samples(128)
        eta = env._boundary_eta(ob, samples)
        shifted = samples + eps * eta
        for s in shifted:
            probed += 1
            try:
                _best_candidate(env, s)
            except NonUniqueProjectionError:
                ambiguous += 1
            except (ConfigurationError, SafetyViolationError):
                ambiguous += 1
    checks.append(ValidationCheck(
        "projection_uniqueness", ambiguous == 0,
        f"{ambiguous} ambiguous of {probed} probes on the inflated boundaries"))

    return ValidationReport(checks=tuple(checks))

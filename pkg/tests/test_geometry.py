"""Distance-field tests: frozen oracle values plus structural properties.

Oracle values were computed with independent methods (closed forms,
dense boundary sampling, scipy.optimize on the boundary parameter)
and are asserted here as literals.
"""

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.optimize import minimize_scalar

from dafnav.geometry import (
    Ball,
    BallWorkspace,
    BoxWorkspace,
    ConfigurationError,
    Ellipsoid,
    Environment,
    NonUniqueProjectionError,
    SafetyViolationError,
    Spline2D,
    UnboundedWorkspace,
    distance,
    project_boundary,
    query,
    validate_environment,
)


def unit_disc_env(epsilon=0.6, robot_radius=0.4):
    return Environment(
        UnboundedWorkspace(2), [Ball(np.zeros(2), 1.0)],
        epsilon=epsilon, robot_radius=robot_radius)


def blob_points(center, base_radius, count=9, seed=1):
    rg = np.random.default_rng(seed)
    th = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    rr = base_radius * (1.0 + 0.25 * rg.standard_normal(count))
    return np.column_stack([center[0] + rr * np.cos(th),
                            center[1] + rr * np.sin(th)])


# ---------------------------------------------------------------------------
# Frozen values


class TestBallOracle:
    def test_outside_point(self):
        env = unit_disc_env()
        q = query(env, [3.0, 0.0])
        assert q.d0 == pytest.approx(2.0, abs=1e-12)
        assert q.d == pytest.approx(1.4, abs=1e-12)
        assert np.allclose(q.eta, [1.0, 0.0], atol=1e-12)

    def test_hessian_eigenvalues(self):
        # Field Hessian of a ball boundary has eigenvalues {0, 1/|p - c|}.
        env = unit_disc_env()
        q = query(env, [3.0, 0.0])
        eigs = np.sort(np.linalg.eigvalsh(q.hessian))
        assert eigs == pytest.approx([0.0, 1.0 / 3.0], abs=1e-9)

    def test_boundary_point_distance(self):
        env = unit_disc_env()
        assert distance(env, [1.0, 0.0]) == pytest.approx(0.0, abs=1e-12)

    def test_inside_is_negative(self):
        env = unit_disc_env()
        assert distance(env, [0.5, 0.0]) == pytest.approx(-0.5, abs=1e-12)

    def test_query_inside_raises(self):
        env = unit_disc_env()
        with pytest.raises(SafetyViolationError):
            query(env, [0.5, 0.0])

    def test_3d_ball(self):
        env = Environment(UnboundedWorkspace(3), [Ball(np.zeros(3), 2.0)],
                          epsilon=1.5, robot_radius=0.8)
        q = query(env, [0.0, 0.0, 5.0])
        assert q.d0 == pytest.approx(3.0, abs=1e-12)
        eigs = np.sort(np.linalg.eigvalsh(q.hessian))
        assert eigs == pytest.approx([0.0, 0.2, 0.2], abs=1e-9)


class TestBoxWorkspaceOracle:
    def test_inner_wall_distance(self):
        ws = BoxWorkspace([-5.0, -5.0], [5.0, 5.0])
        env = Environment(ws, [Ball([0.0, 3.0], 1.0)],
                          epsilon=0.6, robot_radius=0.4)
        q = query(env, [4.0, 0.0])
        assert q.d0 == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(q.eta, [-1.0, 0.0], atol=1e-12)
        assert np.allclose(q.hessian, 0.0, atol=1e-12)

    def test_projection_onto_wall(self):
        ws = BoxWorkspace([-5.0, -5.0], [5.0, 5.0])
        env = Environment(ws, [Ball([0.0, 3.0], 1.0)],
                          epsilon=0.6, robot_radius=0.4)
        foot = project_boundary(env, [4.0, 0.0])
        assert np.allclose(foot, [5.0, 0.0], atol=1e-12)

    def test_center_of_box_is_ambiguous(self):
        ws = BoxWorkspace([-5.0, -5.0], [5.0, 5.0])
        env = Environment(ws, [], epsilon=0.6, robot_radius=0.4)
        with pytest.raises(NonUniqueProjectionError):
            query(env, [0.0, 0.0])

    def test_outside_box_is_negative(self):
        ws = BoxWorkspace([-5.0, -5.0], [5.0, 5.0])
        d, _ = ws.dist_foot(np.array([[7.0, 0.0]]))
        assert d[0] == pytest.approx(-2.0, abs=1e-12)


class TestEllipsoidOracle:
    def test_major_axis_point(self):
        ell = Ellipsoid(np.zeros(2), [2.0, 1.0])
        env = Environment(UnboundedWorkspace(2), [ell],
                          epsilon=0.6, robot_radius=0.4)
        q = query(env, [4.0, 0.0])
        assert q.d0 == pytest.approx(2.0, abs=1e-10)
        # Curvature at the major-axis tip is a/b^2 = 2, so the distance
        # field eigenvalue at s = 2 is 2 / (1 + 2 * 2) = 0.4.
        eigs = np.sort(np.linalg.eigvalsh(q.hessian))
        assert eigs == pytest.approx([0.0, 0.4], abs=1e-9)

    def test_off_axis_against_parametric_oracle(self):
        ell = Ellipsoid(np.zeros(2), [2.0, 1.0])
        p = np.array([1.7, 1.3])

        def chord(th):
            b = np.array([2.0 * np.cos(th), np.sin(th)])
            return float(np.sum((b - p) ** 2))

        best = min(
            (minimize_scalar(chord, bounds=(lo, lo + np.pi), method="bounded",
                             options={"xatol": 1e-14})
             for lo in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)),
            key=lambda res: res.fun)
        d, foot = ell.dist_foot(p[None, :])
        assert d[0] == pytest.approx(np.sqrt(best.fun), abs=1e-10)
        assert chord(0.0) >= best.fun  # oracle sanity

    def test_rotation_equivariance(self):
        th = 0.7
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        c = np.array([1.0, -2.0])
        plain = Ellipsoid(np.zeros(2), [2.0, 1.0])
        turned = Ellipsoid(c, [2.0, 1.0], orientation=R)
        pts = np.random.default_rng(5).uniform(-4, 4, size=(40, 2))
        d_plain, _ = plain.dist_foot(pts)
        d_turned, _ = turned.dist_foot(pts @ R.T + c)
        assert np.allclose(d_plain, d_turned, atol=1e-9)

    def test_interior_point_near_axis(self):
        # Interior points close to the medial axis still produce a foot
        # on the boundary with matching distance.
        ell = Ellipsoid(np.zeros(3), [2.0, 1.0, 0.7])
        pts = np.array([[0.0, 0.0, 0.0], [0.05, 0.0, 0.0], [0.0, 1e-15, 0.0]])
        d, foot = ell.dist_foot(pts)
        on_surface = ((foot / np.array([2.0, 1.0, 0.7])) ** 2).sum(axis=1)
        assert np.allclose(on_surface, 1.0, atol=1e-7)
        assert np.all(d < 0)
        assert np.allclose(np.abs(d), np.linalg.norm(foot - pts, axis=1),
                           atol=1e-9)

    def test_hessian_matches_finite_differences(self):
        ell = Ellipsoid(np.zeros(3), [2.0, 1.0, 0.7])
        env = Environment(UnboundedWorkspace(3), [ell],
                          epsilon=0.2, robot_radius=0.1)
        p = np.array([2.4, 1.9, 1.1])
        q = query(env, p)
        h = 1e-5
        H_fd = np.zeros((3, 3))
        for i in range(3):
            for s, w in ((1.0, 1.0), (-1.0, -1.0)):
                dp = np.zeros(3)
                dp[i] = s * h
                _, eta = env.d0_eta_many((p + dp)[None, :])
                H_fd[:, i] += w * eta[0]
        H_fd /= 2 * h
        assert np.allclose(q.hessian, 0.5 * (H_fd + H_fd.T), atol=1e-5)


class TestSplineOracle:
    def setup_method(self):
        self.spline = Spline2D(blob_points((0.0, 0.0), 1.0, seed=1))

    def test_against_dense_polyline_oracle(self):
        # Oracle: minimize the squared chord over a dense parameter grid,
        # then polish with bounded scalar minimization.
        sp = self.spline
        dense_u = np.linspace(0.0, sp._period, 200001)
        dense = sp._eval(dense_u, 0)
        pts = np.array([[2.0, 0.3], [-1.5, 1.1], [0.2, -2.4], [3.0, 3.0]])
        d, _ = sp.dist_foot(pts)
        for k, p in enumerate(pts):
            j = np.argmin(((dense - p) ** 2).sum(axis=1))
            u0 = dense_u[j]

            def chord(u):
                return float(np.sum((sp._eval(np.array([u]), 0)[0] - p) ** 2))

            res = minimize_scalar(chord, bounds=(u0 - 0.01, u0 + 0.01),
                                  method="bounded",
                                  options={"xatol": 1e-14})
            assert abs(d[k]) == pytest.approx(np.sqrt(res.fun), abs=1e-8)

    def test_inside_sign(self):
        d, _ = self.spline.dist_foot(np.array([[0.0, 0.0]]))
        assert d[0] < 0

    def test_group_matches_per_obstacle(self):
        # The fused multi-spline path must agree with per-obstacle Newton.
        splines = [Spline2D(blob_points(c, 1.0, seed=s))
                   for s, c in enumerate([(-4.0, 0.0), (4.0, 0.0)], start=1)]
        env = Environment(UnboundedWorkspace(2), splines,
                          epsilon=0.6, robot_radius=0.4)
        pts = np.random.default_rng(3).uniform(-7, 7, size=(300, 2))
        d_env, eta_env = env.d0_eta_many(pts)
        d_ref = np.full(len(pts), np.inf)
        foot_ref = np.zeros_like(pts)
        for sp in splines:
            db, fb = sp.dist_foot(pts)
            take = db < d_ref
            d_ref[take] = db[take]
            foot_ref[take] = fb[take]
        assert np.allclose(d_env, d_ref, atol=1e-10)
        eta_ref = (pts - foot_ref) / d_ref[:, None]
        assert np.allclose(eta_env, eta_ref, atol=1e-8)

    def test_rejects_self_intersecting_polygon(self):
        bow = np.array([[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]])
        with pytest.raises(ConfigurationError):
            Spline2D(bow)

    def test_rejects_too_few_points(self):
        with pytest.raises(ConfigurationError):
            Spline2D(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))

    def test_hessian_symmetric_and_annihilates_normal(self):
        env = Environment(UnboundedWorkspace(2), [self.spline],
                          epsilon=0.3, robot_radius=0.2)
        q = query(env, [2.0, 0.7])
        assert np.allclose(q.hessian, q.hessian.T, atol=1e-10)
        assert np.allclose(q.hessian @ q.eta, 0.0, atol=1e-4)


# ---------------------------------------------------------------------------
# Structural properties


def mixed_env():
    ws = BoxWorkspace([-8.0, -8.0], [8.0, 8.0])
    obstacles = [
        Ball([-4.0, -4.0], 1.2),
        Ellipsoid([4.0, -4.0], [1.5, 0.8]),
        Spline2D(blob_points((0.0, 4.0), 1.0, seed=2)),
    ]
    return Environment(ws, obstacles, epsilon=0.6, robot_radius=0.4)


MIXED = mixed_env()

safe_points = st.builds(
    lambda x, y: np.array([x, y]),
    st.floats(-7.5, 7.5), st.floats(-7.5, 7.5),
).filter(lambda p: MIXED.d0_many(p[None, :])[0] > 0.05)


@settings(max_examples=60, deadline=None)
@given(safe_points)
def test_gradient_matches_normal(p):
    # Central finite differences of the distance field reproduce eta.
    # Only claimed off the skeleton: skip points whose two nearest
    # boundary candidates are close in distance but far apart in space.
    cands = MIXED._all_candidates(p)
    if len(cands) > 1:
        tie = (cands[1][0] - cands[0][0] < 5e-3
               and np.linalg.norm(cands[1][1] - cands[0][1]) > 1e-4)
        assume(not tie)
    h = 1e-5
    _, eta = MIXED.d0_eta_many(p[None, :])
    g = np.zeros(2)
    for i in range(2):
        dp = np.zeros(2)
        dp[i] = h
        g[i] = (MIXED.d0_many((p + dp)[None, :])[0]
                - MIXED.d0_many((p - dp)[None, :])[0]) / (2 * h)
    assert np.linalg.norm(g - eta[0]) < 1e-6


@settings(max_examples=60, deadline=None)
@given(safe_points, safe_points)
def test_distance_is_1_lipschitz(p, q):
    dp = MIXED.d0_many(p[None, :])[0]
    dq = MIXED.d0_many(q[None, :])[0]
    assert abs(dp - dq) <= np.linalg.norm(p - q) + 1e-12


@settings(max_examples=40, deadline=None)
@given(safe_points)
def test_query_fields_are_consistent(p):
    try:
        q = query(MIXED, p)
    except NonUniqueProjectionError:
        return
    assert q.d == pytest.approx(q.d0 - MIXED.epsilon, abs=1e-12)
    assert np.linalg.norm(q.eta) == pytest.approx(1.0, abs=1e-9)
    assert q.d0 == pytest.approx(np.linalg.norm(p - q.foot), abs=1e-9)
    assert abs(MIXED.d0_many(q.foot[None, :])[0]) < 1e-6


@settings(max_examples=40, deadline=None)
@given(safe_points)
def test_projection_lands_on_boundary(p):
    try:
        foot = project_boundary(MIXED, p)
    except NonUniqueProjectionError:
        return
    assert abs(MIXED.d0_many(foot[None, :])[0]) < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(1.2, 8.0), st.floats(0.0, 2 * np.pi))
def test_ball_hessian_closed_form(r, th):
    env = unit_disc_env()
    p = r * np.array([np.cos(th), np.sin(th)])
    q = query(env, p)
    eigs = np.sort(np.linalg.eigvalsh(q.hessian))
    assert eigs == pytest.approx([0.0, 1.0 / r], abs=1e-9)
    assert np.allclose(q.hessian @ q.eta, 0.0, atol=1e-9)


def test_skeleton_point_between_equal_balls():
    env = Environment(
        UnboundedWorkspace(2),
        [Ball([-2.0, 0.0], 1.0), Ball([2.0, 0.0], 1.0)],
        epsilon=0.3, robot_radius=0.2)
    with pytest.raises(NonUniqueProjectionError):
        query(env, [0.0, 0.0])
    # Slightly off the midline the projection is unique again.
    q = query(env, [0.5, 0.0])
    assert q.d0 == pytest.approx(0.5, abs=1e-12)


def test_point_outside_workspace_rejected():
    ws = BoxWorkspace([-5.0, -5.0], [5.0, 5.0])
    env = Environment(ws, [Ball([0.0, 3.0], 1.0)],
                      epsilon=0.6, robot_radius=0.4)
    with pytest.raises(ConfigurationError):
        query(env, [6.0, 0.0])


# ---------------------------------------------------------------------------
# Environment construction and validation


def test_constructor_rejects_bad_margins():
    with pytest.raises(ConfigurationError):
        Environment(UnboundedWorkspace(2), [Ball(np.zeros(2), 1.0)],
                    epsilon=-1.0, robot_radius=0.4)
    with pytest.raises(ConfigurationError):
        Environment(UnboundedWorkspace(2), [Ball(np.zeros(2), 1.0)],
                    epsilon=0.6, robot_radius=0.0)
    with pytest.raises(ConfigurationError):
        Environment(UnboundedWorkspace(2), [], epsilon=0.6, robot_radius=0.4)
    with pytest.raises(ConfigurationError):
        Environment(UnboundedWorkspace(3), [Ball(np.zeros(2), 1.0)],
                    epsilon=0.6, robot_radius=0.4)


def test_validation_passes_for_well_separated_scene():
    env = Environment(
        UnboundedWorkspace(2),
        [Ball([-3.0, 0.0], 1.0), Ball([3.0, 0.0], 1.0)],
        epsilon=0.6, robot_radius=0.4)
    report = validate_environment(env)
    assert report.ok, str(report)


def test_validation_flags_narrow_gap():
    # Gap of 1.0 between hulls is below the 2 * epsilon = 1.2 clearance
    # needed for the inflated obstacles to stay disjoint.
    env = Environment(
        UnboundedWorkspace(2),
        [Ball([-1.5, 0.0], 1.0), Ball([1.5, 0.0], 1.0)],
        epsilon=0.6, robot_radius=0.4)
    report = validate_environment(env)
    assert not report.ok
    failed = {c.name for c in report.checks if not c.passed}
    assert any("clearance" in name for name in failed)


def test_validation_flags_fat_robot():
    env = Environment(
        UnboundedWorkspace(2), [Ball(np.zeros(2), 1.0)],
        epsilon=0.6, robot_radius=0.6)
    report = validate_environment(env)
    assert not report.ok
    failed = {c.name for c in report.checks if not c.passed}
    assert any("robot" in name for name in failed)


def test_validation_checks_declared_bounds():
    good = Environment(UnboundedWorkspace(2), [Ball(np.zeros(2), 1.0)],
                       epsilon=0.6, robot_radius=0.4,
                       reach_bound=2.0, regularity_bound=1.0)
    assert validate_environment(good).ok
    bad = Environment(UnboundedWorkspace(2), [Ball(np.zeros(2), 1.0)],
                      epsilon=0.6, robot_radius=0.4, reach_bound=0.5)
    assert not validate_environment(bad).ok


def test_validation_report_is_readable():
    env = unit_disc_env()
    report = validate_environment(env)
    text = str(report)
    assert "pass" in text or "PASS" in text


def test_workspace_wall_in_union():
    ws = BallWorkspace(np.zeros(2), 6.0)
    env = Environment(ws, [Ball(np.zeros(2), 1.0)],
                      epsilon=0.6, robot_radius=0.4)
    # Near the wall the shell, not the inner ball, is the active boundary.
    q = query(env, [5.0, 0.0])
    assert q.d0 == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(q.eta, [-1.0, 0.0], atol=1e-12)
    eigs = np.sort(np.linalg.eigvalsh(q.hessian))
    # Wall curves away from the interior: nonzero eigenvalue -1/|p - c|.
    assert eigs == pytest.approx([-0.2, 0.0], abs=1e-9)

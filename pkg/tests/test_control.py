"""Control-law tests: frozen worked examples and algebraic identities."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dafnav.control import (
    AvoidanceGain,
    AvoidanceGains,
    PotentialFieldGains,
    avoidance_accel,
    dissipation_rates,
    potential_energy,
    potential_field_accel,
    repulsion_magnitude,
    tracking_energy,
)
from dafnav.geometry import ConfigurationError, SafetyViolationError

GAINS = AvoidanceGains(k_goal=10.0, k_damp=5.0, k_avoid=10.0,
                       near=0.5, far=1.4)
BASELINE = PotentialFieldGains(k_goal=10.0, k_damp=5.0, k_rep=400.0,
                               influence=1.4)
TARGET = np.array([2.0, -2.0])


class TestGainProfile:
    def test_inverse_region(self):
        g = AvoidanceGain(0.5, 1.4)
        assert g(0.25) == pytest.approx(4.0, abs=1e-14)
        assert g(0.1) == pytest.approx(10.0, abs=1e-12)

    def test_cutoff_region(self):
        g = AvoidanceGain(0.5, 1.4)
        assert g(1.4) == 0.0
        assert g(2.0) == 0.0
        assert g(np.inf) == 0.0

    @pytest.mark.parametrize("near,far", [(0.5, 1.4), (2.5, 3.5)])
    def test_junction_continuity(self, near, far):
        # Value and slope agree across both junctions to first order.
        g = AvoidanceGain(near, far)
        h = 1e-8
        for z in (near, far):
            assert abs(g(z - h) - g(z + h)) < 1e-6
            left = (g(z) - g(z - h)) / h
            right = (g(z + h) - g(z)) / h
            assert abs(left - right) < 1e-6

    @pytest.mark.parametrize("near,far", [(0.5, 1.4), (2.5, 3.5)])
    def test_nonnegative_and_decreasing(self, near, far):
        g = AvoidanceGain(near, far)
        z = np.linspace(0.01, far + 1.0, 4000)
        vals = g(z)
        assert np.all(vals >= 0.0)
        assert np.all(np.diff(vals) <= 1e-12)

    def test_derivative_matches_finite_differences(self):
        g = AvoidanceGain(0.5, 1.4)
        z = np.linspace(0.05, 2.0, 97)
        h = 1e-7
        fd = (g(z + h) - g(z - h)) / (2 * h)
        assert np.allclose(g.derivative(z), fd, atol=1e-5)

    def test_rejects_contact(self):
        g = AvoidanceGain(0.5, 1.4)
        with pytest.raises(SafetyViolationError):
            g(0.0)
        with pytest.raises(SafetyViolationError):
            g(np.array([0.3, -0.1]))

    def test_rejects_bad_radii(self):
        with pytest.raises(ConfigurationError):
            AvoidanceGain(1.4, 0.5)
        with pytest.raises(ConfigurationError):
            AvoidanceGain(0.0, 1.0)


class TestAvoidanceLaw:
    def test_worked_example(self):
        # p at origin, unit upward speed, wall below at clearance 0.25:
        # gain is 4, so the normal term removes 40 units of upward pull.
        u = avoidance_accel(
            p=[0.0, 0.0], v=[0.0, 1.0], d=0.25, eta=[0.0, 1.0],
            target=TARGET, gains=GAINS)
        assert np.allclose(u, [20.0, -65.0], atol=1e-12)

    def test_far_from_boundary_reduces_to_pd(self):
        u = avoidance_accel(
            p=[0.0, 0.0], v=[0.0, 1.0], d=5.0, eta=[0.0, 1.0],
            target=TARGET, gains=GAINS)
        assert np.allclose(u, [20.0, -25.0], atol=1e-12)

    def test_batch_matches_rows(self):
        rng = np.random.default_rng(0)
        P = rng.normal(size=(8, 2))
        V = rng.normal(size=(8, 2))
        E = rng.normal(size=(8, 2))
        E /= np.linalg.norm(E, axis=1, keepdims=True)
        D = rng.uniform(0.1, 2.0, size=8)
        U = avoidance_accel(P, V, D, E, TARGET, GAINS)
        for i in range(8):
            ui = avoidance_accel(P[i], V[i], D[i], E[i], TARGET, GAINS)
            assert np.allclose(U[i], ui, atol=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2),
           st.floats(-2, 2), st.floats(0.05, 3.0), st.floats(0, 2 * np.pi))
    def test_energy_decay_identity(self, px, py, vx, vy, d, th):
        # d/dt of the tracking energy along the law equals the negated
        # dissipation split: k_goal e.v + v.u = -(viscous + normal).
        p = np.array([px, py])
        v = np.array([vx, vy])
        eta = np.array([np.cos(th), np.sin(th)])
        u = avoidance_accel(p, v, d, eta, TARGET, GAINS)
        lhs = GAINS.k_goal * np.dot(p - TARGET, v) + np.dot(v, u)
        viscous, normal = dissipation_rates(v, d, eta, GAINS)
        assert lhs == pytest.approx(-(viscous + normal), abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 2 * np.pi), st.floats(0.05, 3.0))
    def test_rotation_equivariance(self, th, d):
        Q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        p = np.array([0.3, -1.2])
        v = np.array([0.8, 0.4])
        eta = np.array([0.6, 0.8])
        u = avoidance_accel(p, v, d, eta, np.zeros(2), GAINS)
        u_rot = avoidance_accel(Q @ p, Q @ v, d, Q @ eta, np.zeros(2), GAINS)
        assert np.allclose(Q @ u, u_rot, atol=1e-12)

    def test_normal_term_never_pushes(self):
        # The avoidance term is parallel to eta with sign opposing the
        # normal velocity component: it cannot accelerate toward the
        # boundary faster than the nominal law would.
        rng = np.random.default_rng(1)
        for _ in range(200):
            v = rng.normal(size=2)
            eta = rng.normal(size=2)
            eta /= np.linalg.norm(eta)
            d = rng.uniform(0.05, 1.3)
            u = avoidance_accel(np.zeros(2), v, d, eta, np.zeros(2), GAINS)
            u_free = avoidance_accel(np.zeros(2), v, 10.0, eta, np.zeros(2),
                                     GAINS)
            extra = np.dot(u - u_free, eta)
            assert extra * np.dot(eta, v) <= 1e-12


class TestBaselineLaw:
    def test_repulsion_worked_example(self):
        # k_rep (1/d - 1/influence) / d^2 at d = 0.7 with influence 1.4.
        mag = repulsion_magnitude(0.7, BASELINE)
        assert mag == pytest.approx(583.0903790087464, rel=1e-13)

    def test_repulsion_vanishes_outside_influence(self):
        assert repulsion_magnitude(1.4, BASELINE) == 0.0
        assert repulsion_magnitude(7.0, BASELINE) == 0.0

    def test_repulsion_rejects_contact(self):
        with pytest.raises(SafetyViolationError):
            repulsion_magnitude(0.0, BASELINE)

    def test_worked_example(self):
        u = potential_field_accel(
            p=[0.0, 0.0], v=[0.0, 1.0], d=0.7, eta=[0.0, 1.0],
            target=TARGET, gains=BASELINE)
        assert np.allclose(u, [20.0, -25.0 + 583.0903790087464], atol=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2),
           st.floats(-2, 2), st.floats(0.05, 3.0), st.floats(0, 2 * np.pi))
    def test_baseline_energy_identity(self, px, py, vx, vy, d, th):
        # Total potential energy decays only through viscous damping:
        # k_goal e.v + v.u + dU_rep/dt = -k_damp |v|^2 with
        # dU_rep/dt = -repulsion(d) (eta . v).
        p = np.array([px, py])
        v = np.array([vx, vy])
        eta = np.array([np.cos(th), np.sin(th)])
        u = potential_field_accel(p, v, d, eta, TARGET, BASELINE)
        stored_rate = -repulsion_magnitude(d, BASELINE) * np.dot(eta, v)
        lhs = (BASELINE.k_goal * np.dot(p - TARGET, v) + np.dot(v, u)
               + stored_rate)
        assert lhs == pytest.approx(-BASELINE.k_damp * np.dot(v, v), abs=1e-8)


class TestEnergies:
    def test_tracking_energy_example(self):
        val = tracking_energy([0.0, 0.0], [0.0, 1.0], TARGET, 10.0)
        assert val == pytest.approx(40.5, abs=1e-13)

    def test_dissipation_example(self):
        viscous, normal = dissipation_rates(
            [0.0, 1.0], 0.25, [0.0, 1.0], GAINS)
        assert viscous == pytest.approx(5.0, abs=1e-13)
        assert normal == pytest.approx(40.0, abs=1e-13)

    def test_potential_energy_reduces_far_away(self):
        near = potential_energy([0.0, 0.0], [0.0, 1.0], 0.7, TARGET, BASELINE)
        far = potential_energy([0.0, 0.0], [0.0, 1.0], 5.0, TARGET, BASELINE)
        assert far == pytest.approx(40.5, abs=1e-13)
        assert near > far

    def test_batch_shapes(self):
        P = np.zeros((4, 2))
        V = np.tile([0.0, 1.0], (4, 1))
        E = np.tile([0.0, 1.0], (4, 1))
        D = np.full(4, 0.25)
        assert tracking_energy(P, V, TARGET, 10.0).shape == (4,)
        viscous, normal = dissipation_rates(V, D, E, GAINS)
        assert viscous.shape == (4,) and normal.shape == (4,)
        assert potential_energy(P, V, D, TARGET, BASELINE).shape == (4,)


def test_gains_validation():
    with pytest.raises(ConfigurationError):
        AvoidanceGains(k_goal=-1.0, k_damp=5.0, k_avoid=10.0,
                       near=0.5, far=1.4)
    with pytest.raises(ConfigurationError):
        AvoidanceGains(k_goal=10.0, k_damp=5.0, k_avoid=10.0,
                       near=1.4, far=0.5)
    with pytest.raises(ConfigurationError):
        PotentialFieldGains(k_goal=10.0, k_damp=5.0, k_rep=0.0,
                            influence=1.4)

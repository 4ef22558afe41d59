"""Acceleration laws for double-integrator goal seeking near obstacles.

Two controllers share the same goal-attraction and damping terms and
differ in how they use the clearance signal:

* the avoidance law removes kinetic energy along the obstacle normal
  through a clearance-gated damping term, never pushing the robot;
* the potential-field baseline adds a repulsive force that grows as
  the robot approaches the boundary.

All functions broadcast over a leading batch axis: positions,
velocities and normals may be (n,) or (m, n), clearances scalar or
(m,).
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import ConfigurationError, SafetyViolationError

__all__ = [
    "AvoidanceGain",
    "AvoidanceGains",
    "PotentialFieldGains",
    "avoidance_accel",
    "potential_field_accel",
    "repulsion_magnitude",
    "tracking_energy",
    "potential_energy",
    "dissipation_rates",
]


class AvoidanceGain:
    """Clearance-to-gain profile: inverse near contact, zero when far.

    Equals 1/z for 0 < z < near, follows a cubic on [near, far) that
    matches value and slope at both ends, and vanishes for z >= far.
    The profile is C^1 on (0, inf).
    """

    def __init__(self, near, far):
        if not (np.isfinite(near) and np.isfinite(far) and 0 < near < far):
            raise ConfigurationError("gain profile needs 0 < near < far")
        self.near = float(near)
        self.far = float(far)
        n, f = self.near, self.far
        # Cubic taper fixed by value/slope continuity at both junctions.
        A = np.array([
            [n**3, n**2, n, 1.0],
            [3 * n**2, 2 * n, 1.0, 0.0],
            [f**3, f**2, f, 1.0],
            [3 * f**2, 2 * f, 1.0, 0.0],
        ])
        rhs = np.array([1.0 / n, -1.0 / n**2, 0.0, 0.0])
        self._cubic = np.linalg.solve(A, rhs)
        if np.max(np.abs(A @ self._cubic - rhs)) > 1e-9:
            raise ConfigurationError("gain taper solve is ill conditioned")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z <= 0.0):
            raise SafetyViolationError("gain undefined at nonpositive clearance")
        out = np.zeros_like(z)
        lo = z < self.near
        mid = ~lo & (z < self.far)
        out[lo] = 1.0 / z[lo]
        out[mid] = np.polyval(self._cubic, z[mid])
        return out if out.ndim else float(out)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z <= 0.0):
            raise SafetyViolationError("gain undefined at nonpositive clearance")
        out = np.zeros_like(z)
        lo = z < self.near
        mid = ~lo & (z < self.far)
        out[lo] = -1.0 / z[lo] ** 2
        out[mid] = np.polyval(np.polyder(self._cubic), z[mid])
        return out if out.ndim else float(out)


def _positive(value, name):
    if not (np.isfinite(value) and value > 0):
        raise ConfigurationError(f"{name} must be positive")
    return float(value)


@dataclass(frozen=True, eq=False)
class AvoidanceGains:
    """Gains for the normal-damping avoidance controller."""

    k_goal: float
    k_damp: float
    k_avoid: float
    near: float
    far: float
    gain: AvoidanceGain = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("k_goal", "k_damp", "k_avoid"):
            object.__setattr__(self, name, _positive(getattr(self, name), name))
        object.__setattr__(self, "gain", AvoidanceGain(self.near, self.far))
        object.__setattr__(self, "near", self.gain.near)
        object.__setattr__(self, "far", self.gain.far)


@dataclass(frozen=True, eq=False)
class PotentialFieldGains:
    """Gains for the repulsive potential-field baseline."""

    k_goal: float
    k_damp: float
    k_rep: float
    influence: float

    def __post_init__(self):
        for name in ("k_goal", "k_damp", "k_rep", "influence"):
            object.__setattr__(self, name, _positive(getattr(self, name), name))


def _normal_speed(eta, v):
    return np.sum(np.asarray(eta, float) * np.asarray(v, float),
                  axis=-1, keepdims=True)


def avoidance_accel(p, v, d, eta, target, gains):
    """Goal tracking with clearance-gated damping along the normal.

    u = -k_goal (p - target) - k_damp v - k_avoid g(d) eta (eta . v)

    The last term only ever opposes motion toward or away from the
    boundary, so it dissipates energy instead of injecting it.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    eta = np.asarray(eta, dtype=float)
    g = np.asarray(gains.gain(d))
    normal_term = g[..., None] * eta * _normal_speed(eta, v)
    return (-gains.k_goal * (p - np.asarray(target, float))
            - gains.k_damp * v
            - gains.k_avoid * normal_term)


def repulsion_magnitude(d, gains):
    """Baseline repulsion strength k_rep (1/d - 1/influence) / d^2."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0):
        raise SafetyViolationError("repulsion undefined at nonpositive clearance")
    out = np.zeros_like(d)
    act = d < gains.influence
    out[act] = gains.k_rep * (1.0 / d[act] - 1.0 / gains.influence) / d[act] ** 2
    return out if out.ndim else float(out)


def potential_field_accel(p, v, d, eta, target, gains):
    """Baseline: goal attraction, viscous damping, boundary repulsion."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    eta = np.asarray(eta, dtype=float)
    rep = np.asarray(repulsion_magnitude(d, gains))
    return (-gains.k_goal * (p - np.asarray(target, float))
            - gains.k_damp * v
            + rep[..., None] * eta)


def tracking_energy(p, v, target, k_goal):
    """Quadratic goal-tracking energy k_goal |p - target|^2 / 2 + |v|^2 / 2.

    Along avoidance-controlled motion this never increases; its decay
    rate is the sum returned by dissipation_rates.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    err = p - np.asarray(target, float)
    return (0.5 * k_goal * np.sum(err * err, axis=-1)
            + 0.5 * np.sum(v * v, axis=-1))


def potential_energy(p, v, d, target, gains):
    """Energy for the baseline: tracking energy plus repulsive storage.

    The stored term is k_rep (1/d - 1/influence)^2 / 2 inside the
    influence radius; the baseline law conserves this total up to the
    viscous damping loss.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0):
        raise SafetyViolationError("potential undefined at nonpositive clearance")
    stored = np.zeros_like(d)
    act = d < gains.influence
    gap = 1.0 / d[act] - 1.0 / gains.influence
    stored[act] = 0.5 * gains.k_rep * gap * gap
    base = tracking_energy(p, v, target, gains.k_goal)
    return base + (stored if stored.ndim else float(stored))


def dissipation_rates(v, d, eta, gains):
    """Decay-rate split of the tracking energy under the avoidance law.

    Returns (viscous, normal) with viscous = k_damp |v|^2 and
    normal = k_avoid g(d) (eta . v)^2; the tracking energy satisfies
    dE/dt = -(viscous + normal).
    """
    v = np.asarray(v, dtype=float)
    eta = np.asarray(eta, dtype=float)
    g = np.asarray(gains.gain(d))
    w = np.sum(eta * v, axis=-1)
    viscous = gains.k_damp * np.sum(v * v, axis=-1)
    normal = gains.k_avoid * g * w * w
    return viscous, normal

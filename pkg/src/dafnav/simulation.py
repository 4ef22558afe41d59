"""Double-integrator simulation engine with batched lockstep runs.

The engine integrates many runs of the same scenario side by side:
one distance query per integration stage covers every active run, so
a ten-run batch costs little more than a single run. Rows finish
independently (converged, stalled, safety violation, or timeout) and
are frozen while the rest continue.

Explicit RK4 cannot survive the near-contact gain, whose magnitude
grows like 1/clearance during a stall. Steps whose normal-direction
stiffness exceeds a threshold switch to a split scheme: the normal
velocity component follows the exact solution of its frozen-coefficient
linear ODE, while the tangential part keeps RK4. The normal update is
self-limiting (displacement per step shrinks with the clearance), so a
stalling run approaches the boundary without ever crossing it.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .control import (
    avoidance_accel,
    dissipation_rates,
    potential_energy,
    potential_field_accel,
    tracking_energy,
)
from .geometry import ConfigurationError, SafetyViolationError
from .sensing import nearest_from_scan, scan

__all__ = [
    "SimConfig",
    "Outcome",
    "Trajectory",
    "AvoidanceController",
    "BaselineController",
    "step",
    "simulate",
    "batch_simulate",
    "CONVERGED",
    "STALLED",
    "SAFETY_VIOLATION",
    "TIMEOUT",
]

CONVERGED = "converged"
STALLED = "stalled"
SAFETY_VIOLATION = "safety_violation"
TIMEOUT = "timeout"

_MIN_CLEARANCE = 1e-12


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Integration settings; t_max is rounded to a whole number of steps."""

    dt: float = 1e-3
    t_max: float = 60.0
    pos_tol: float = 1e-2
    vel_tol: float = 1e-3
    record_stride: int = 1
    stall_window: float = 1.0
    stiff_threshold: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.dt) and 0 < self.dt <= 1e-2):
            raise ConfigurationError("dt must lie in (0, 1e-2]")
        if not (np.isfinite(self.t_max) and self.t_max >= self.dt):
            raise ConfigurationError("t_max must cover at least one step")
        for name in ("pos_tol", "vel_tol", "stall_window", "stiff_threshold"):
            if not (np.isfinite(getattr(self, name)) and getattr(self, name) > 0):
                raise ConfigurationError(f"{name} must be positive")
        if int(self.record_stride) < 1:
            raise ConfigurationError("record_stride must be at least 1")
        object.__setattr__(self, "record_stride", int(self.record_stride))

    @property
    def steps(self):
        return max(1, int(round(self.t_max / self.dt)))


@dataclass(frozen=True, eq=False)
class Outcome:
    """How a run ended: kind, when, and the terminal state."""

    kind: str
    time: float
    position: np.ndarray
    speed: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded run: stride samples plus the terminal sample.

    d is the true control clearance (distance to the inflated boundary)
    at the recorded positions, independent of what a sensor estimated.
    energy is the controller's own storage function. u at a safety
    violation is NaN because the law is undefined in contact.
    """

    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    u: np.ndarray
    d: np.ndarray
    energy: np.ndarray
    outcome: Outcome
    controller: str
    target: np.ndarray
    epsilon: float
    pos_tol: float
    dt: float

    @property
    def dim(self):
        return self.p.shape[1]

    def to_csv(self, path):
        n = self.dim
        cols = (["t"]
                + [f"p{i + 1}" for i in range(n)]
                + [f"v{i + 1}" for i in range(n)]
                + [f"u{i + 1}" for i in range(n)]
                + ["d", "L"])
        rows = np.column_stack([self.t, self.p, self.v, self.u,
                                self.d, self.energy])
        np.savetxt(path, rows, fmt="%.17g", delimiter=",",
                   header=",".join(cols), comments="")


def _row_rng(base_seed, p0, v0):
    # Seed from the initial state so a run is reproducible regardless of
    # how it is batched with others.
    digest = hashlib.sha256(
        np.ascontiguousarray(p0, dtype=float).tobytes()
        + np.ascontiguousarray(v0, dtype=float).tobytes()).digest()
    h = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), h]))


class _ControllerBase:
    """Shared plumbing: oracle clearance or a held scan plane.

    In sensor mode the controller refreshes a sweep every period and
    holds the nearest boundary as a frozen plane between sweeps, so the
    clearance estimate moves continuously with the robot.
    """

    def __init__(self, env, target, gains, sensor=None):
        self.env = env
        self.target = np.asarray(target, dtype=float)
        if self.target.shape != (env.dim,):
            raise ConfigurationError("target dimension mismatch")
        self.gains = gains
        self.sensor = sensor
        self._rngs = None

    @property
    def uses_sensor(self):
        return self.sensor is not None

    def start(self, P0, V0, base_seed):
        m, n = P0.shape
        if self.uses_sensor:
            self._rngs = [_row_rng(base_seed, P0[i], V0[i])
                          for i in range(m)]
            self._last_scan = np.full(m, -np.inf)
            self._plane_d0 = np.full(m, np.inf)
            self._plane_eta = np.zeros((m, n))
            self._plane_p = np.zeros((m, n))

    def maybe_rescan(self, t, P, rows):
        if not self.uses_sensor:
            return
        due = t - self._last_scan[rows] >= self.sensor.period - 1e-12
        for local, row in enumerate(rows):
            if not due[local]:
                continue
            sweep = scan(self.env, P[local], self.sensor,
                         rng=self._rngs[row])
            est = nearest_from_scan(sweep)
            if est is None:
                self._plane_d0[row] = np.inf
                self._plane_eta[row] = 0.0
            else:
                self._plane_d0[row] = est[0]
                self._plane_eta[row] = est[1]
            self._plane_p[row] = P[local]
            self._last_scan[row] = t

    def plane(self, P, rows, d0_true, eta_true):
        """Clearance and normal the control law actually uses."""
        if not self.uses_sensor:
            return d0_true - self.env.epsilon, eta_true
        eta = self._plane_eta[rows]
        d0 = (self._plane_d0[rows]
              + np.sum(eta * (P - self._plane_p[rows]), axis=1))
        return np.maximum(d0 - self.env.epsilon, _MIN_CLEARANCE), eta


class AvoidanceController(_ControllerBase):
    """Normal-damping avoidance law driving the engine."""

    name = "avoidance"
    supports_stiff = True

    def accel(self, P, V, rows, d0_true, eta_true):
        d, eta = self.plane(P, rows, d0_true, eta_true)
        return avoidance_accel(P, V, np.maximum(d, _MIN_CLEARANCE), eta,
                               self.target, self.gains)

    def stiffness(self, dt, P, rows, d0_true, eta_true):
        d, _ = self.plane(P, rows, d0_true, eta_true)
        g = self.gains.gain(np.maximum(d, _MIN_CLEARANCE))
        return self.gains.k_avoid * np.asarray(g) * dt

    def energy(self, P, V, d_true):
        return tracking_energy(P, V, self.target, self.gains.k_goal)


class BaselineController(_ControllerBase):
    """Potential-field baseline driving the engine."""

    name = "baseline"
    supports_stiff = False

    def accel(self, P, V, rows, d0_true, eta_true):
        d, eta = self.plane(P, rows, d0_true, eta_true)
        return potential_field_accel(P, V, np.maximum(d, _MIN_CLEARANCE),
                                     eta, self.target, self.gains)

    def stiffness(self, dt, P, rows, d0_true, eta_true):
        return np.zeros(len(P))

    def energy(self, P, V, d_true):
        return potential_energy(P, V, np.maximum(d_true, _MIN_CLEARANCE),
                                self.target, self.gains)


_RK4_NODES = (0.0, 0.5, 0.5, 1.0)


def step(env, controller, t, p, v, dt):
    """One exact-RK4 step of a single oracle-mode run.

    Raises SafetyViolationError naming the stage when an intermediate
    evaluation point leaves the free space. Diagnostic path: the batch
    engine freezes rows instead of raising.
    """
    if controller.uses_sensor:
        raise ConfigurationError("step() supports oracle mode only")
    if controller.env is not env:
        raise ConfigurationError(
            "controller was built for a different environment")
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    kp, kv = [], []
    for k, node in enumerate(_RK4_NODES):
        if k == 0:
            ps, vs = p, v
        else:
            ps = p + dt * node * kp[k - 1]
            vs = v + dt * node * kv[k - 1]
        d0, eta = env.d0_eta_many(ps[None, :])
        if d0[0] <= env.epsilon:
            raise SafetyViolationError(
                "integration stage crossed the inflated boundary",
                time=t + node * dt, stage=k)
        u = controller.accel(ps[None, :], vs[None, :], np.array([0]),
                             d0, eta)[0]
        kp.append(vs.copy())
        kv.append(u)
    w = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0
    p_new = p + dt * sum(wi * ki for wi, ki in zip(w, kp))
    v_new = v + dt * sum(wi * ki for wi, ki in zip(w, kv))
    return p_new, v_new


def _rk4_rows(env, controller, t, P, V, rows, dt, d0_first, eta_first):
    """Vectorised RK4 on a row subset; returns updated state and a mask
    of rows whose intermediate stage crossed the inflated boundary."""
    kp, kv = [], []
    bad = np.zeros(len(rows), dtype=bool)
    for k, node in enumerate(_RK4_NODES):
        if k == 0:
            ps, vs = P, V
            d0, eta = d0_first, eta_first
        else:
            ps = P + dt * node * kp[k - 1]
            vs = V + dt * node * kv[k - 1]
            d0, eta = env.d0_eta_many(ps)
            bad |= d0 <= env.epsilon
        safe_d0 = np.maximum(d0, _MIN_CLEARANCE + env.epsilon)
        kp.append(vs)
        kv.append(controller.accel(ps, vs, rows, safe_d0, eta))
    w = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0
    P_new = P + dt * sum(wi * ki for wi, ki in zip(w, kp))
    V_new = V + dt * sum(wi * ki for wi, ki in zip(w, kv))
    return P_new, V_new, bad


def _stiff_rows(controller, P, V, rows, dt, d0_true, eta_true):
    """Split step: exact overdamped normal update, tangential RK4.

    The clearance gain and normal are frozen over the step, which is
    accurate exactly in the regime that triggers this branch (large
    gain, hence tiny normal displacement per step).
    """
    gains = controller.gains
    d, eta = controller.plane(P, rows, d0_true, eta_true)
    d = np.maximum(d, _MIN_CLEARANCE)
    w0 = np.sum(eta * V, axis=1)
    err = P - controller.target
    a_hat = gains.k_goal * np.sum(eta * err, axis=1)
    g = gains.k_damp + gains.k_avoid * np.asarray(gains.gain(d))
    Vt = V - eta * w0[:, None]

    def tangential(Ps, Vs):
        e = Ps - controller.target
        a = -gains.k_goal * (e - eta * np.sum(eta * e, axis=1)[:, None])
        return a - gains.k_damp * Vs

    kp, kv = [], []
    for k, node in enumerate(_RK4_NODES):
        if k == 0:
            ps, vs = P, Vt
        else:
            ps = P + dt * node * kp[k - 1]
            vs = Vt + dt * node * kv[k - 1]
        kp.append(vs)
        kv.append(tangential(ps, vs))
    w = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0
    P_new = P + dt * sum(wi * ki for wi, ki in zip(w, kp))
    Vt_new = Vt + dt * sum(wi * ki for wi, ki in zip(w, kv))

    decay = np.exp(-g * dt)
    shifted = w0 + a_hat / g
    w_end = shifted * decay - a_hat / g
    dn = shifted * (1.0 - decay) / g - a_hat * dt / g
    return P_new + eta * dn[:, None], Vt_new + eta * w_end[:, None]


def _validate_inits(env, P0, V0):
    P0 = np.asarray(P0, dtype=float)
    V0 = np.asarray(V0, dtype=float)
    if P0.ndim != 2 or P0.shape[1] != env.dim:
        raise ConfigurationError("initial positions must be (m, dim)")
    if V0.shape != P0.shape:
        raise ConfigurationError("initial velocities must match positions")
    if not (np.isfinite(P0).all() and np.isfinite(V0).all()):
        raise ConfigurationError("initial state must be finite")
    d0 = env.d0_many(P0)
    if np.any(d0 <= env.epsilon):
        bad = int(np.argmin(d0))
        raise ConfigurationError(
            f"initial position {bad} is not strictly inside the "
            "inflated free space")
    return P0, V0


def batch_simulate(env, controller, P0, V0, config):
    """Integrate every row in lockstep; returns one Trajectory per row."""
    if controller.env is not env:
        raise ConfigurationError(
            "controller was built for a different environment")
    P0, V0 = _validate_inits(env, P0, V0)
    m, n = P0.shape
    dt = config.dt
    stride = config.record_stride
    steps = config.steps
    controller.start(P0, V0, config.seed)

    cap = steps // stride + 3
    rec_t = np.zeros((cap, m))
    rec_p = np.zeros((cap, m, n))
    rec_v = np.zeros((cap, m, n))
    rec_u = np.zeros((cap, m, n))
    rec_d = np.zeros((cap, m))
    rec_e = np.zeros((cap, m))
    counts = np.zeros(m, dtype=int)

    P = P0.copy()
    V = V0.copy()
    active = np.ones(m, dtype=bool)
    kinds = [TIMEOUT] * m
    end_time = np.full(m, config.t_max)
    dwell = np.zeros(m, dtype=int)
    dwell_needed = max(1, int(round(config.stall_window / dt)))

    def record(rows, t, U, d0):
        idx = counts[rows]
        d_ctrl = d0 - env.epsilon
        energy = controller.energy(
            P[rows], V[rows], np.maximum(d_ctrl, _MIN_CLEARANCE))
        energy = np.where(d_ctrl > 0.0, energy, np.nan)
        rec_t[idx, rows] = t
        rec_p[idx, rows] = P[rows]
        rec_v[idx, rows] = V[rows]
        rec_u[idx, rows] = U
        rec_d[idx, rows] = d_ctrl
        rec_e[idx, rows] = energy
        counts[rows] += 1

    def finish(rows, t, kind, U, d0):
        record(rows, t, U, d0)
        for r in rows:
            kinds[r] = kind
            end_time[r] = t
        active[rows] = False

    for k in range(steps + 1):
        t = k * dt
        rows = np.where(active)[0]
        if rows.size == 0:
            break
        controller.maybe_rescan(t, P[rows], rows)
        d0, eta = env.d0_eta_many(P[rows])

        violated = d0 <= env.epsilon
        if violated.any():
            finish(rows[violated], t, SAFETY_VIOLATION,
                   np.full((int(violated.sum()), n), np.nan), d0[violated])

        ok = ~violated
        if ok.any():
            sub = rows[ok]
            U = controller.accel(P[sub], V[sub], sub, d0[ok], eta[ok])
            speed = np.linalg.norm(V[sub], axis=1)
            err = np.linalg.norm(P[sub] - controller.target, axis=1)
            conv = (err < config.pos_tol) & (speed < config.vel_tol)
            dwell[sub] = np.where(speed < config.vel_tol, dwell[sub] + 1, 0)
            stalled = ~conv & (dwell[sub] >= dwell_needed)
            if conv.any():
                finish(sub[conv], t, CONVERGED, U[conv], d0[ok][conv])
            if stalled.any():
                finish(sub[stalled], t, STALLED, U[stalled], d0[ok][stalled])
            live = ~conv & ~stalled
            if k == steps:
                if live.any():
                    finish(sub[live], t, TIMEOUT, U[live], d0[ok][live])
                break
            move = sub[live]
            if move.size:
                if k % stride == 0:
                    record(move, t, U[live], d0[ok][live])
                stiff = controller.stiffness(
                    dt, P[move], move, d0[ok][live], eta[ok][live])
                hard = stiff > config.stiff_threshold
                if hard.any():
                    hr = move[hard]
                    P[hr], V[hr] = _stiff_rows(
                        controller, P[hr], V[hr], hr, dt,
                        d0[ok][live][hard], eta[ok][live][hard])
                soft = ~hard
                if soft.any():
                    sr = move[soft]
                    P_new, V_new, bad = _rk4_rows(
                        env, controller, t, P[sr], V[sr], sr, dt,
                        d0[ok][live][soft], eta[ok][live][soft])
                    good = ~bad
                    P[sr[good]] = P_new[good]
                    V[sr[good]] = V_new[good]
                    if bad.any():
                        # A mid-step stage left the free space: freeze the
                        # row at its last safe state and time.
                        finish(sr[bad], t, SAFETY_VIOLATION,
                               np.full((int(bad.sum()), n), np.nan),
                               env.d0_many(P[sr[bad]]))
        elif k == steps:
            break

    out = []
    for i in range(m):
        c = counts[i]
        outcome = Outcome(kind=kinds[i], time=float(end_time[i]),
                          position=rec_p[c - 1, i].copy(),
                          speed=float(np.linalg.norm(rec_v[c - 1, i])))
        out.append(Trajectory(
            t=rec_t[:c, i].copy(), p=rec_p[:c, i].copy(),
            v=rec_v[:c, i].copy(), u=rec_u[:c, i].copy(),
            d=rec_d[:c, i].copy(), energy=rec_e[:c, i].copy(),
            outcome=outcome, controller=controller.name,
            target=controller.target.copy(), epsilon=env.epsilon,
            pos_tol=config.pos_tol, dt=dt))
    return out


def simulate(env, controller, p0, v0, config):
    """Single-run convenience wrapper around batch_simulate."""
    p0 = np.asarray(p0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    return batch_simulate(env, controller, p0[None, :], v0[None, :],
                          config)[0]

"""Scenario files: one JSON document describes a complete experiment.

A scenario bundles the workspace, obstacles, safety margins, controller
gain sets, sensor settings, integration settings, the target, and the
initial states.  load_scenario() parses and cross-checks a document,
then hands back live objects ready for the engine; every failure is a
ScenarioError carrying a JSON-path ("$.obstacles[2].radius") so a bad
file can be fixed without reading tracebacks.

Documents are versioned ("version": 1).  A handful of scenarios ship
inside the package (see bundled_scenarios()); load_scenario accepts
either a file path or one of those bare names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from .control import AvoidanceGains, PotentialFieldGains
from .geometry import (
    Ball,
    BallWorkspace,
    BoxWorkspace,
    ConfigurationError,
    Ellipsoid,
    Environment,
    Spline2D,
    UnboundedWorkspace,
    validate_environment,
)
from .sensing import SensorConfig
from .simulation import (
    AvoidanceController,
    BaselineController,
    SimConfig,
)

__all__ = [
    "ScenarioError",
    "Scenario",
    "SCHEMA",
    "bundled_scenarios",
    "load_scenario",
    "override_sim",
]


class ScenarioError(Exception):
    """A scenario document is malformed; str() includes the JSON path."""

    def __init__(self, message, path="$"):
        self.path = path
        super().__init__(f"{path}: {message}")


_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "dimension", "workspace", "obstacles",
                 "robot_radius", "epsilon", "eps1", "eps2", "target",
                 "initial_states", "controllers", "sim"],
    "properties": {
        "version": {"const": 1},
        "name": {"type": "string", "minLength": 1},
        "dimension": {"type": "integer", "minimum": 2},
        "workspace": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["box", "ball", "unbounded"]},
                "low": _VEC, "high": _VEC,
                "center": _VEC, "radius": _POS,
            },
        },
        "obstacles": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["ball", "ellipsoid", "spline"]},
                    "center": _VEC,
                    "radius": _POS,
                    "semi_axes": _VEC,
                    "angle": {"type": "number"},
                    "orientation": {"type": "array", "items": _VEC},
                    "control_points": {
                        "type": "array", "items": _VEC, "minItems": 4,
                    },
                },
            },
        },
        "robot_radius": _POS,
        "epsilon": _POS,
        "eps1": _POS,
        "eps2": _POS,
        "reach_bound": _POS,
        "regularity_bound": _POS,
        "target": _VEC,
        "initial_states": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["position"],
                "properties": {"position": _VEC, "velocity": _VEC},
            },
        },
        "controllers": {
            "type": "object",
            "additionalProperties": False,
            "required": ["avoidance"],
            "properties": {
                "avoidance": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["k_goal", "k_damp", "k_avoid"],
                    "properties": {
                        "k_goal": _POS, "k_damp": _POS, "k_avoid": _POS,
                    },
                },
                "baseline": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["potential_field", "avoidance"]},
                        "k_goal": _POS, "k_damp": _POS,
                        "k_rep": _POS, "influence": _POS,
                        "k_avoid": _POS,
                    },
                },
            },
        },
        "sensor": {
            "type": "object",
            "additionalProperties": False,
            "required": ["max_range"],
            "properties": {
                "max_range": _POS,
                "ray_count": {"type": "integer", "minimum": 3},
                "noise_stddev": _NONNEG,
                "period": _POS,
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_max"],
            "properties": {
                "t_max": _POS, "dt": _POS,
                "pos_tol": _POS, "vel_tol": _POS,
                "record_stride": {"type": "integer", "minimum": 1},
                "stall_window": _POS, "stiff_threshold": _POS,
            },
        },
        "seed": {"type": "integer", "minimum": 0},
    },
}

_VALIDATOR = Draft202012Validator(SCHEMA)


def _vector(doc, value, path):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (doc["dimension"],):
        raise ScenarioError(
            f"expected {doc['dimension']} components, got {arr.shape}", path)
    if not np.isfinite(arr).all():
        raise ScenarioError("components must be finite", path)
    return arr


def _require(block, keys, path):
    for key in keys:
        if key not in block:
            raise ScenarioError(f"missing field {key!r} for kind "
                                f"{block['kind']!r}", path)


def _build_workspace(doc):
    spec = doc["workspace"]
    kind = spec["kind"]
    try:
        if kind == "box":
            _require(spec, ("low", "high"), "$.workspace")
            return BoxWorkspace(_vector(doc, spec["low"], "$.workspace.low"),
                                _vector(doc, spec["high"],
                                        "$.workspace.high"))
        if kind == "ball":
            _require(spec, ("center", "radius"), "$.workspace")
            return BallWorkspace(
                _vector(doc, spec["center"], "$.workspace.center"),
                spec["radius"])
        return UnboundedWorkspace(doc["dimension"])
    except ConfigurationError as exc:
        raise ScenarioError(str(exc), "$.workspace") from exc


def _build_obstacle(doc, spec, path):
    kind = spec["kind"]
    try:
        if kind == "ball":
            _require(spec, ("center", "radius"), path)
            return Ball(_vector(doc, spec["center"], f"{path}.center"),
                        spec["radius"])
        if kind == "ellipsoid":
            _require(spec, ("center", "semi_axes"), path)
            center = _vector(doc, spec["center"], f"{path}.center")
            semi = _vector(doc, spec["semi_axes"], f"{path}.semi_axes")
            orient = None
            if "angle" in spec and "orientation" in spec:
                raise ScenarioError("give either angle or orientation, "
                                    "not both", path)
            if "angle" in spec:
                if doc["dimension"] != 2:
                    raise ScenarioError("angle is only meaningful in 2-d; "
                                        "use orientation", f"{path}.angle")
                c, s = np.cos(spec["angle"]), np.sin(spec["angle"])
                orient = np.array([[c, -s], [s, c]])
            elif "orientation" in spec:
                orient = np.asarray(spec["orientation"], dtype=float)
            return Ellipsoid(center, semi, orient)
        _require(spec, ("control_points",), path)
        if doc["dimension"] != 2:
            raise ScenarioError("spline obstacles are 2-d only", path)
        pts = np.asarray(spec["control_points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ScenarioError("control_points must be an (m, 2) array",
                                f"{path}.control_points")
        return Spline2D(pts)
    except ConfigurationError as exc:
        raise ScenarioError(str(exc), path) from exc


@dataclass(frozen=True, eq=False)
class Scenario:
    """A parsed, validated scenario ready to drive the engine."""

    name: str
    env: Environment
    target: np.ndarray
    initial_positions: np.ndarray
    initial_velocities: np.ndarray
    gains: AvoidanceGains
    baseline_kind: str | None
    baseline_gains: AvoidanceGains | PotentialFieldGains | None
    sensor: SensorConfig | None
    sim: SimConfig
    raw: dict

    @property
    def dim(self):
        return self.env.dim

    def controller(self, mode="oracle"):
        """Avoidance controller; mode is 'oracle' or 'lidar'."""
        return AvoidanceController(self.env, self.target, self.gains,
                                   self._sensor_for(mode))

    def baseline_controller(self, mode="oracle"):
        """Declared baseline controller; raises when the scenario has none."""
        if self.baseline_kind is None:
            raise ScenarioError(
                "this scenario declares no baseline controller; add a "
                "controllers.baseline block to enable comparison",
                "$.controllers.baseline")
        sensor = self._sensor_for(mode)
        if self.baseline_kind == "avoidance":
            return AvoidanceController(self.env, self.target,
                                       self.baseline_gains, sensor)
        return BaselineController(self.env, self.target,
                                  self.baseline_gains, sensor)

    def _sensor_for(self, mode):
        if mode not in ("oracle", "lidar"):
            raise ConfigurationError(
                f"sensor mode must be 'oracle' or 'lidar', got {mode!r}")
        if mode == "oracle":
            return None
        if self.sensor is None:
            raise ScenarioError(
                "lidar mode needs a sensor block", "$.sensor")
        return self.sensor


def bundled_scenarios():
    """Sorted names of the scenario documents shipped with the package."""
    root = resources.files(__package__) / "scenarios"
    return sorted(entry.name[:-5] for entry in root.iterdir()
                  if entry.name.endswith(".json"))


def _read_source(source):
    path = Path(source)
    if path.suffix == ".json" or "/" in str(source) or path.exists():
        try:
            return path.read_text(), path.stem
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    entry = resources.files(__package__) / "scenarios" / f"{source}.json"
    if not entry.is_file():
        raise ScenarioError(
            f"unknown scenario {str(source)!r}; bundled scenarios: "
            f"{', '.join(bundled_scenarios())}")
    return entry.read_text(), str(source)


def load_scenario(source):
    """Parse, schema-check, and semantically validate a scenario.

    source is a path to a JSON file or the bare name of a bundled
    scenario.  Returns a Scenario; raises ScenarioError otherwise.
    """
    text, stem = _read_source(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc

    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        first = errors[0]
        raise ScenarioError(first.message, first.json_path)

    workspace = _build_workspace(doc)
    obstacles = [
        _build_obstacle(doc, spec, f"$.obstacles[{i}]")
        for i, spec in enumerate(doc["obstacles"])
    ]

    eps = doc["epsilon"]
    if not doc["eps1"] < doc["eps2"]:
        raise ScenarioError("eps1 must be smaller than eps2", "$.eps1")
    if not doc["robot_radius"] < eps:
        raise ScenarioError(
            f"robot_radius {doc['robot_radius']} must be smaller than "
            f"epsilon {eps}", "$.robot_radius")
    try:
        env = Environment(workspace, obstacles, eps, doc["robot_radius"],
                          doc.get("reach_bound"), doc.get("regularity_bound"))
    except ConfigurationError as exc:
        raise ScenarioError(str(exc)) from exc

    target = _vector(doc, doc["target"], "$.target")
    if env.d0_many(target[None, :])[0] <= eps:
        raise ScenarioError(
            "target lies outside the inflated free space", "$.target")

    m = len(doc["initial_states"])
    P0 = np.zeros((m, env.dim))
    V0 = np.zeros((m, env.dim))
    for i, state in enumerate(doc["initial_states"]):
        P0[i] = _vector(doc, state["position"],
                        f"$.initial_states[{i}].position")
        if "velocity" in state:
            V0[i] = _vector(doc, state["velocity"],
                            f"$.initial_states[{i}].velocity")
    clear = env.d0_many(P0)
    if np.any(clear <= eps):
        bad = int(np.argmin(clear))
        raise ScenarioError(
            "initial position lies outside the inflated free space",
            f"$.initial_states[{bad}].position")

    spec = doc["controllers"]["avoidance"]
    try:
        gains = AvoidanceGains(spec["k_goal"], spec["k_damp"],
                               spec["k_avoid"], doc["eps1"], doc["eps2"])
    except ConfigurationError as exc:
        raise ScenarioError(str(exc), "$.controllers.avoidance") from exc

    baseline_kind = None
    baseline_gains = None
    if "baseline" in doc["controllers"]:
        bspec = doc["controllers"]["baseline"]
        baseline_kind = bspec.get("kind", "potential_field")
        bpath = "$.controllers.baseline"
        try:
            if baseline_kind == "avoidance":
                _require(dict(bspec, kind="avoidance"),
                         ("k_goal", "k_damp", "k_avoid"), bpath)
                baseline_gains = AvoidanceGains(
                    bspec["k_goal"], bspec["k_damp"], bspec["k_avoid"],
                    doc["eps1"], doc["eps2"])
            else:
                _require(dict(bspec, kind="potential_field"),
                         ("k_goal", "k_damp", "k_rep"), bpath)
                baseline_gains = PotentialFieldGains(
                    bspec["k_goal"], bspec["k_damp"], bspec["k_rep"],
                    bspec.get("influence", doc["eps2"]))
        except ConfigurationError as exc:
            raise ScenarioError(str(exc), bpath) from exc

    sensor = None
    if "sensor" in doc:
        sspec = doc["sensor"]
        if sspec["max_range"] <= eps + doc["eps2"]:
            raise ScenarioError(
                "max_range must exceed epsilon + eps2 so the sensor sees "
                "every boundary the controller reacts to",
                "$.sensor.max_range")
        try:
            sensor = SensorConfig(
                max_range=sspec["max_range"],
                ray_count=sspec.get("ray_count", 720),
                noise_stddev=sspec.get("noise_stddev", 0.0),
                period=sspec.get("period", 0.01))
        except ConfigurationError as exc:
            raise ScenarioError(str(exc), "$.sensor") from exc

    try:
        sim = SimConfig(seed=doc.get("seed", 0), **doc["sim"])
    except (ConfigurationError, TypeError) as exc:
        raise ScenarioError(str(exc), "$.sim") from exc

    report = validate_environment(env)
    if not report.ok:
        raise ScenarioError(f"environment failed validation:\n{report}")

    return Scenario(
        name=doc.get("name", stem), env=env, target=target,
        initial_positions=P0, initial_velocities=V0, gains=gains,
        baseline_kind=baseline_kind, baseline_gains=baseline_gains,
        sensor=sensor, sim=sim, raw=doc)


def override_sim(scenario, seed=None, dt=None, t_max=None):
    """Copy of the scenario with selected integration settings replaced."""
    updates = {}
    if seed is not None:
        updates["seed"] = int(seed)
    if dt is not None:
        updates["dt"] = float(dt)
    if t_max is not None:
        updates["t_max"] = float(t_max)
    if not updates:
        return scenario
    try:
        sim = replace(scenario.sim, **updates)
    except ConfigurationError as exc:
        raise ScenarioError(str(exc), "$.sim") from exc
    return Scenario(
        name=scenario.name, env=scenario.env, target=scenario.target,
        initial_positions=scenario.initial_positions,
        initial_velocities=scenario.initial_velocities,
        gains=scenario.gains, baseline_kind=scenario.baseline_kind,
        baseline_gains=scenario.baseline_gains, sensor=scenario.sensor,
        sim=sim, raw=scenario.raw)

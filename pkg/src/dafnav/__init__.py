"""Navigation sandbox: distance fields, feedback laws, simulation, analysis."""

from .analysis import (
    DistanceDynamics,
    EquilibriumReport,
    ProbeResult,
    RunMetrics,
    curvature_condition,
    distance_dynamics,
    escape_probe,
    find_equilibria,
    metrics,
)
from .control import (
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
from .geometry import (
    Ball,
    BallWorkspace,
    BoxWorkspace,
    ConfigurationError,
    DistanceQuery,
    Ellipsoid,
    Environment,
    NonUniqueProjectionError,
    SafetyViolationError,
    Spline2D,
    UnboundedWorkspace,
    ValidationReport,
    distance,
    project_boundary,
    query,
    validate_environment,
)
from .scenario import (
    SCHEMA,
    Scenario,
    ScenarioError,
    bundled_scenarios,
    load_scenario,
    override_sim,
)
from .sensing import (
    Scan,
    SensorConfig,
    nearest_from_scan,
    ray_cast,
    ray_directions,
    scan,
    write_scan_csv,
)
from .simulation import (
    CONVERGED,
    SAFETY_VIOLATION,
    STALLED,
    TIMEOUT,
    AvoidanceController,
    BaselineController,
    Outcome,
    SimConfig,
    Trajectory,
    batch_simulate,
    simulate,
    step,
)

__all__ = [
    "AvoidanceController",
    "AvoidanceGain",
    "AvoidanceGains",
    "Ball",
    "BallWorkspace",
    "BaselineController",
    "BoxWorkspace",
    "CONVERGED",
    "ConfigurationError",
    "DistanceDynamics",
    "DistanceQuery",
    "Ellipsoid",
    "Environment",
    "EquilibriumReport",
    "NonUniqueProjectionError",
    "Outcome",
    "PotentialFieldGains",
    "ProbeResult",
    "RunMetrics",
    "SAFETY_VIOLATION",
    "SCHEMA",
    "STALLED",
    "SafetyViolationError",
    "Scan",
    "Scenario",
    "ScenarioError",
    "SensorConfig",
    "SimConfig",
    "Spline2D",
    "TIMEOUT",
    "Trajectory",
    "UnboundedWorkspace",
    "ValidationReport",
    "avoidance_accel",
    "batch_simulate",
    "bundled_scenarios",
    "curvature_condition",
    "dissipation_rates",
    "distance",
    "distance_dynamics",
    "escape_probe",
    "find_equilibria",
    "load_scenario",
    "metrics",
    "nearest_from_scan",
    "override_sim",
    "potential_energy",
    "potential_field_accel",
    "project_boundary",
    "query",
    "ray_cast",
    "ray_directions",
    "repulsion_magnitude",
    "scan",
    "simulate",
    "step",
    "tracking_energy",
    "validate_environment",
    "write_scan_csv",
]

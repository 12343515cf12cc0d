"""Quadrotor board drawing: trajectory generation and convex-MPC tracking
for a small quadrotor that drags a magnetic pen across a vertical-mounted
steel drawing board."""

from .model import (
    ALWAYS_ON,
    CONTACT_GATED,
    ModelParams,
    continuous_dynamics,
    load_params,
)
from .discretize import (
    LinearModel,
    dlqr_gain,
    hover_equilibrium,
    linearize,
    linearize_hover,
    load_linear_model,
    rk4_step,
    save_linear_model,
    spectral_radius,
)
from .qp import (
    MpcConfig,
    MpcController,
    QpProblem,
    SolverError,
    condense,
    kkt_residual,
    load_qp,
    mpc_step,
    save_qp,
    solve_box_qp,
)
from .trajgen import (
    ReferenceTrajectory,
    WaypointPath,
    circle,
    figure8,
    glyph_to_path,
    insert_liftoff,
    lift_to_reference,
    load_pbm,
    load_points_csv,
    load_waypoints,
    resample_path,
    save_pbm,
    save_waypoints,
    skeletonize,
    tsp_order,
    velocity_profile_curvature,
    velocity_profile_finite_diff,
)
from .mpc import (
    SimResult,
    SimulationError,
    export_fullstate_csv,
    load_fullstate_csv,
    metrics_summary,
    run_simulation,
    tracking_errors,
)
from .presets import (
    PRESETS,
    Preset,
    build_path,
    build_reference,
    data_path,
)

__version__ = "0.1.0"

__all__ = [
    "ALWAYS_ON", "CONTACT_GATED", "ModelParams", "continuous_dynamics",
    "load_params", "LinearModel", "dlqr_gain", "hover_equilibrium",
    "linearize", "linearize_hover", "load_linear_model", "rk4_step",
    "save_linear_model", "spectral_radius", "MpcConfig", "MpcController",
    "QpProblem", "SolverError", "condense", "kkt_residual", "load_qp",
    "mpc_step", "save_qp", "solve_box_qp", "ReferenceTrajectory",
    "WaypointPath", "circle", "figure8", "glyph_to_path", "insert_liftoff",
    "lift_to_reference", "load_pbm", "load_points_csv", "load_waypoints",
    "resample_path", "save_pbm", "save_waypoints", "skeletonize",
    "tsp_order", "velocity_profile_curvature", "velocity_profile_finite_diff",
    "SimResult", "SimulationError", "export_fullstate_csv",
    "load_fullstate_csv", "metrics_summary", "run_simulation",
    "tracking_errors", "PRESETS", "Preset", "build_path", "build_reference",
    "data_path",
]

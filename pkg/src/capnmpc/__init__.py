"""Sampling-based NMPC via constraint-aware particle filtering/smoothing."""

from .dynamics import (
    BicycleModel,
    ControlInput,
    MlpDynamics,
    MlpLayer,
    MlpModel,
    VehicleState,
    bicycle_step,
    load_model,
    mlp_forward,
    nn_step,
    save_model,
)
from .errors import (
    CapnmpcError,
    ConfigError,
    DegenerateHorizonError,
    DegenerateSmoothingError,
    InvalidInputError,
    InvalidTrajectoryError,
    ModelFormatError,
)
from .estimator import (
    AugmentedParticle,
    ParticleHistory,
    ReferenceTrajectory,
    SolverConfig,
    backward_smooth,
    effective_sample_size,
    forward_filter,
    measurement_loglik,
    nmpc_step,
    point_estimate,
    propagate,
    softplus_barrier,
    solve_horizon,
    systematic_resample,
    trajectory_logposterior,
    transition_logdensity,
)
from .planner import (
    EpisodeResult,
    Obstacle,
    RoadGeometry,
    Scenario,
    assemble_constraints,
    builtin_scenario,
    control_bound_constraints,
    lateral_offset,
    obstacle_constraint,
    road_constraint,
    run_episode,
    scenario1,
    scenario2,
    update_obstacles,
)
from .rng import StreamFamily

__version__ = "0.1.0"

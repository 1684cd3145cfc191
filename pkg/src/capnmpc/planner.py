"""Motion-planning layer: road geometry, obstacles, constraints, episodes.

Encodes the driving problem as a constraint evaluator plus a goal reference
and runs closed-loop receding-horizon episodes. The plant is always the
analytic bicycle; the controller's model is whatever the caller passes in,
which is how model-mismatch experiments are run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import BicycleModel, VehicleState
from .errors import (
    ConfigError,
    DegenerateHorizonError,
    DegenerateSmoothingError,
    InvalidInputError,
)
from .estimator import (
    ReferenceTrajectory,
    SolverConfig,
    point_estimate,
    solve_horizon,
)
from .rng import StreamFamily

# Both car footprints (4 m x 2 m) enclosed by discs of radius sqrt(5) ~ 2.236 m.
DEFAULT_SAFETY_RADIUS = 4.47
DEFAULT_VEHICLE_HALF_WIDTH = 1.0


@dataclass(frozen=True)
class RoadGeometry:
    """Straight road along the x-axis, or a sine-shaped centerline."""

    kind: str  # "straight" | "sine"
    width: float
    amplitude: float = 0.0
    wavelength: float = 0.0

    def __post_init__(self):
        if self.kind not in ("straight", "sine"):
            raise ConfigError(f"road kind must be 'straight' or 'sine', got {self.kind!r}")
        if self.width <= 0:
            raise ConfigError("road width must be positive")
        if self.kind == "sine" and (self.amplitude <= 0 or self.wavelength <= 0):
            raise ConfigError("sine road requires positive amplitude and wavelength")

    def centerline_y(self, px):
        if self.kind == "straight":
            return np.zeros_like(np.asarray(px, dtype=np.float64))
        return self.amplitude * np.sin(2.0 * math.pi * np.asarray(px, dtype=np.float64)
                                       / self.wavelength)

    def heading_at(self, px: float) -> float:
        """Centerline tangent angle; used to seed initial headings."""
        if self.kind == "straight":
            return 0.0
        slope = self.amplitude * 2.0 * math.pi / self.wavelength * math.cos(
            2.0 * math.pi * px / self.wavelength)
        return math.atan(slope)


def lateral_offset(state, road: RoadGeometry):
    """Signed offset from the centerline (vertical-offset approximation on sine roads)."""
    if isinstance(state, VehicleState):
        return float(state.py - road.centerline_y(state.px))
    arr = np.asarray(state, dtype=np.float64)
    return arr[..., 1] - road.centerline_y(arr[..., 0])


def road_constraint(state, road: RoadGeometry, vehicle_half_width: float):
    """g <= 0 keeps the whole vehicle width inside the road."""
    margin = road.width / 2.0 - vehicle_half_width
    return np.abs(lateral_offset(state, road)) - margin


def obstacle_constraint(state, obstacle_position, safety_radius: float):
    """g <= 0 keeps the center distance at or above the safety radius."""
    if safety_radius <= 0:
        raise ConfigError("safety_radius must be positive")
    if isinstance(state, VehicleState):
        pos = np.array([state.px, state.py])
    else:
        pos = np.asarray(state, dtype=np.float64)[..., :2]
    diff = pos - np.asarray(obstacle_position, dtype=np.float64)
    return safety_radius - np.sqrt(np.sum(diff * diff, axis=-1))


def control_bound_constraints(control, lower, upper):
    """Box bounds as the stacked pair (lower - u, u - upper), each <= 0 when feasible."""
    u = np.asarray(control, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    return np.concatenate([lower - u, u - upper], axis=-1)


@dataclass(frozen=True)
class Obstacle:
    """A static or triggered-moving vehicle abstracted to a disc.

    Moving obstacles stay dormant until the ego's along-road distance drops
    below trigger_distance, then follow their lane (initial centerline offset)
    at cruise_speed forever after.
    """

    kind: str  # "static" | "moving"
    x: float
    y: float
    cruise_speed: float = 0.0
    trigger_distance: float = 0.0

    def __post_init__(self):
        if self.kind not in ("static", "moving"):
            raise ConfigError(f"obstacle kind must be 'static' or 'moving', got {self.kind!r}")
        if self.kind == "moving" and self.trigger_distance <= 0:
            raise ConfigError("moving obstacles need a positive trigger_distance")


@dataclass(frozen=True)
class ObstacleSnapshot:
    """Obstacle positions and trigger latches at one episode step."""

    positions: np.ndarray  # (n_obs, 2)
    triggered: np.ndarray  # (n_obs,) bool


@dataclass(frozen=True)
class Scenario:
    """One driving problem: geometry, obstacles, endpoints, bounds, budget."""

    name: str
    road: RoadGeometry
    obstacles: tuple[Obstacle, ...]
    ego_init: VehicleState
    goal: np.ndarray                # (4,) reference state [px, py, v, psi]
    goal_mask: np.ndarray           # (4,) bool, channels the tracking term penalizes
    control_lower: np.ndarray       # (2,)
    control_upper: np.ndarray       # (2,)
    episode_length: int
    goal_tolerance: float
    reference_speed: float
    wheelbase: float = 4.0
    vehicle_half_width: float = DEFAULT_VEHICLE_HALF_WIDTH
    safety_radius: float = DEFAULT_SAFETY_RADIUS
    # Extra clearance the controller plans for on top of safety_radius; covers
    # obstacle motion over the horizon (positions are frozen at horizon start).
    planning_margin: float = 0.0
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(
        horizon=10, particles=300,
        q_precision=np.diag([0.5, 20.0]),
        r_precision=np.diag([1.0, 1.0, 0.5, 0.0])))

    def __post_init__(self):
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=np.float64))
        object.__setattr__(self, "goal_mask", np.asarray(self.goal_mask, dtype=bool))
        object.__setattr__(self, "control_lower", np.asarray(self.control_lower, dtype=np.float64))
        object.__setattr__(self, "control_upper", np.asarray(self.control_upper, dtype=np.float64))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.road.width <= 2 * self.vehicle_half_width:
            raise ConfigError("road must be wider than the vehicle")
        if np.any(self.control_lower >= self.control_upper):
            raise ConfigError("control bounds must satisfy lower < upper per channel")
        if self.episode_length < 1:
            raise ConfigError("episode_length must be >= 1")
        if self.goal_tolerance <= 0:
            raise ConfigError("goal_tolerance must be positive")
        for label, state in (("ego_init", self.ego_init.as_array()), ("goal", self.goal)):
            if float(road_constraint(state, self.road, self.vehicle_half_width)) > 0:
                raise ConfigError(f"{label} lies outside the road")


class ScenarioConstraints:
    """Bundled road, per-obstacle, and control-bound constraints.

    Obstacle positions are frozen at the horizon start: the evaluator is built
    once per receding-horizon solve from the current snapshot.
    """

    def __init__(self, scenario: Scenario, obstacle_positions: np.ndarray):
        self.scenario = scenario
        self.positions = np.asarray(obstacle_positions, dtype=np.float64).reshape(-1, 2)
        self.planning_radius = scenario.safety_radius + scenario.planning_margin
        self.n_outputs = 1 + len(self.positions) + 4

    def evaluate(self, states: np.ndarray, controls: np.ndarray, t: int) -> np.ndarray:
        sc = self.scenario
        n = states.shape[0]
        out = np.empty((n, self.n_outputs))
        out[:, 0] = road_constraint(states, sc.road, sc.vehicle_half_width)
        for j, pos in enumerate(self.positions):
            out[:, 1 + j] = obstacle_constraint(states, pos, self.planning_radius)
        out[:, 1 + len(self.positions):] = control_bound_constraints(
            controls, sc.control_lower, sc.control_upper)
        return out


def assemble_constraints(scenario: Scenario,
                         obstacle_positions: np.ndarray | None = None) -> ScenarioConstraints:
    """Constraint evaluator for the scenario with obstacles frozen where given."""
    if obstacle_positions is None:
        obstacle_positions = initial_obstacle_snapshot(scenario).positions
    return ScenarioConstraints(scenario, obstacle_positions)


def initial_obstacle_snapshot(scenario: Scenario) -> ObstacleSnapshot:
    positions = np.array([[o.x, o.y] for o in scenario.obstacles], dtype=np.float64)
    positions = positions.reshape(-1, 2)
    return ObstacleSnapshot(positions=positions,
                            triggered=np.zeros(len(scenario.obstacles), dtype=bool))


def update_obstacles(scenario: Scenario, snapshot: ObstacleSnapshot,
                     ego: VehicleState, dt: float) -> ObstacleSnapshot:
    """Advance triggered movers one step; trigger latches permanently.

    Along-road distance is the horizontal gap |obstacle_x - ego_x|; a mover's
    lane is its initial offset from the centerline, held while it advances.
    """
    positions = snapshot.positions.copy()
    triggered = snapshot.triggered.copy()
    for j, obs in enumerate(scenario.obstacles):
        if obs.kind != "moving":
            continue
        if not triggered[j] and abs(positions[j, 0] - ego.px) < obs.trigger_distance:
            triggered[j] = True
        if triggered[j]:
            lane = obs.y - float(scenario.road.centerline_y(obs.x))
            positions[j, 0] += obs.cruise_speed * dt
            positions[j, 1] = lane + float(scenario.road.centerline_y(positions[j, 0]))
    return ObstacleSnapshot(positions=positions, triggered=triggered)


def build_references(scenario: Scenario, horizon: int) -> ReferenceTrajectory:
    """Goal-state reference, constant over the horizon; v-channel tracks reference_speed."""
    ref = scenario.goal.copy()
    ref[2] = scenario.reference_speed
    return ReferenceTrajectory.constant(ref, scenario.goal_mask, horizon)


@dataclass(frozen=True)
class EpisodeResult:
    """Closed-loop trace and bookkeeping of one episode."""

    states: np.ndarray                 # (K+1, 4)
    controls: np.ndarray               # (K, 2)
    min_obstacle_distance: np.ndarray  # (K+1,) center distance, inf with no obstacles
    boundary_margin: np.ndarray        # (K+1,) >= 0 while inside the road margins
    obstacle_positions: np.ndarray     # (K+1, n_obs, 2)
    success: bool
    collision: bool
    steps_to_goal: int | None
    failure_reason: str | None = None

    @property
    def min_distance_overall(self) -> float:
        return float(np.min(self.min_obstacle_distance))


def _min_obstacle_distance(state: np.ndarray, positions: np.ndarray) -> float:
    if len(positions) == 0:
        return math.inf
    diff = positions - state[:2]
    return float(np.min(np.sqrt(np.sum(diff * diff, axis=1))))


def run_episode(scenario: Scenario, model, cfg: SolverConfig,
                streams: StreamFamily) -> EpisodeResult:
    """Closed receding-horizon loop until the goal region or the step budget.

    `model` is the controller's dynamics model; the plant stepping the true
    state is always the analytic bicycle. Estimator degeneracy ends the episode
    as a failure with diagnostics rather than raising.
    """
    plant = BicycleModel(scenario.wheelbase)
    refs = build_references(scenario, cfg.horizon)
    margin_cap = scenario.road.width / 2.0 - scenario.vehicle_half_width

    state = scenario.ego_init.as_array()
    snap = initial_obstacle_snapshot(scenario)
    states = [state]
    controls: list[np.ndarray] = []
    min_dists = [_min_obstacle_distance(state, snap.positions)]
    margins = [margin_cap - abs(float(lateral_offset(state, scenario.road)))]
    obstacle_trace = [snap.positions]
    u_shift = np.zeros(2)
    steps_to_goal = None
    failure = None

    for k in range(scenario.episode_length):
        if float(np.hypot(*(state[:2] - scenario.goal[:2]))) <= scenario.goal_tolerance:
            steps_to_goal = k
            break
        evaluator = ScenarioConstraints(scenario, snap.positions)
        try:
            hist, smoothed = solve_horizon(model, evaluator, refs, state, cfg,
                                           streams.lane(k), u_shift)
        except (DegenerateHorizonError, DegenerateSmoothingError,
                InvalidInputError) as exc:
            failure = f"estimator failed at episode step {k}: {exc}"
            break
        control = point_estimate(hist.states[0], hist.controls[0], smoothed[0]).control
        u_shift = point_estimate(hist.states[1], hist.controls[1], smoothed[1]).control
        # actuator saturation: the plant can only realize bounded controls
        control = np.clip(control, scenario.control_lower, scenario.control_upper)
        state = plant.step(state[None, :], control[None, :], cfg.dt)[0]
        snap = update_obstacles(scenario, snap, VehicleState.from_array(state), cfg.dt)

        states.append(state)
        controls.append(control)
        min_dists.append(_min_obstacle_distance(state, snap.positions))
        margins.append(margin_cap - abs(float(lateral_offset(state, scenario.road))))
        obstacle_trace.append(snap.positions)
    else:
        if float(np.hypot(*(state[:2] - scenario.goal[:2]))) <= scenario.goal_tolerance:
            steps_to_goal = scenario.episode_length

    min_dists_arr = np.array(min_dists)
    collision = bool(np.any(min_dists_arr < scenario.safety_radius))
    success = steps_to_goal is not None and not collision and failure is None
    return EpisodeResult(
        states=np.array(states),
        controls=np.array(controls).reshape(-1, 2),
        min_obstacle_distance=min_dists_arr,
        boundary_margin=np.array(margins),
        obstacle_positions=np.array(obstacle_trace),
        success=success,
        collision=collision,
        steps_to_goal=steps_to_goal,
        failure_reason=failure,
    )


def _scenario1_solver(seed: int = 0) -> SolverConfig:
    return SolverConfig(
        horizon=10, particles=300,
        q_precision=np.diag([0.5, 20.0]),
        r_precision=np.diag([0.05, 0.05, 0.5, 0.0]),
        alpha=1.0, beta=5.0, eta_std=0.1,
        smoother_bandwidth=1e-2, resample_threshold=0.5,
        seed=seed, dt=0.2)


def scenario1(seed: int = 0) -> Scenario:
    """Straight road, three stationary obstacles staggered across it."""
    return Scenario(
        name="scenario1",
        road=RoadGeometry(kind="straight", width=10.0),
        obstacles=(
            Obstacle(kind="static", x=25.0, y=3.0),
            Obstacle(kind="static", x=45.0, y=-3.0),
            Obstacle(kind="static", x=65.0, y=3.0),
        ),
        ego_init=VehicleState(px=0.0, py=0.0, v=0.0, psi=0.0),
        goal=np.array([80.0, 0.0, 0.0, 0.0]),
        goal_mask=np.array([True, True, True, False]),
        control_lower=np.array([-3.0, -0.5]),
        control_upper=np.array([3.0, 0.5]),
        episode_length=150,
        goal_tolerance=3.0,
        reference_speed=8.0,
        solver=_scenario1_solver(seed),
    )


def scenario2(seed: int = 0) -> Scenario:
    """Sine road, three triggered movers the ego has to overtake."""
    road = RoadGeometry(kind="sine", width=10.0, amplitude=5.0, wavelength=100.0)

    def on_lane(x: float, offset: float) -> tuple[float, float]:
        return x, float(road.centerline_y(x)) + offset

    movers = []
    for x, offset in ((30.0, -3.5), (55.0, 3.5), (80.0, -3.5)):
        ox, oy = on_lane(x, offset)
        movers.append(Obstacle(kind="moving", x=ox, y=oy, cruise_speed=5.0,
                               trigger_distance=25.0))
    goal_x = 140.0
    return Scenario(
        name="scenario2",
        road=road,
        obstacles=tuple(movers),
        ego_init=VehicleState(px=0.0, py=0.0, v=5.0, psi=road.heading_at(0.0)),
        goal=np.array([goal_x, float(road.centerline_y(goal_x)), 0.0, 0.0]),
        goal_mask=np.array([True, True, True, False]),
        control_lower=np.array([-3.0, -0.5]),
        control_upper=np.array([3.0, 0.5]),
        episode_length=200,
        goal_tolerance=3.0,
        reference_speed=10.0,
        planning_margin=1.8,
        solver=_scenario1_solver(seed),
    )


BUILTIN_SCENARIOS = {"scenario1": scenario1, "scenario2": scenario2}


def builtin_scenario(name: str, seed: int = 0) -> Scenario:
    try:
        factory = BUILTIN_SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; builtins: "
                          f"{sorted(BUILTIN_SCENARIOS)}") from None
    return factory(seed)


def with_solver(scenario: Scenario, solver: SolverConfig) -> Scenario:
    return replace(scenario, solver=solver)

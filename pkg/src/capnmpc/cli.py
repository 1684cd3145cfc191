"""Command-line front end: runs scenarios, the LQ oracle check, model validation.

Configuration is a single JSON document; every key can also be overridden on
the command line with dotted paths (`--solver.N 500`, `--seed 3`). Outputs are
plain CSV/JSON so any external tool can plot them.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from .dynamics import (
    BicycleModel,
    MlpDynamics,
    VehicleState,
    bicycle_step_batch,
    load_model,
    nn_step_batch,
)
from .errors import ConfigError, ModelFormatError
from .estimator import SolverConfig
from .oracle import run_lq_check
from .planner import (
    Obstacle,
    RoadGeometry,
    Scenario,
    builtin_scenario,
    run_episode,
)
from .rng import StreamFamily

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PLANNING = 2

# Uniform sampling box for model validation; mirrors the trainer's dataset ranges.
VALIDATION_RANGES = {
    "px": (0.0, 100.0),
    "py": (-5.0, 5.0),
    "v": (0.0, 15.0),
    "psi": (-0.6, 0.6),
    "a": (-3.0, 3.0),
    "delta": (-0.5, 0.5),
}

_SOLVER_KEYS = {
    "H": "horizon",
    "N": "particles",
    "Q": "q_precision",
    "R": "r_precision",
    "alpha": "alpha",
    "beta": "beta",
    "eta_std": "eta_std",
    "smoother_bandwidth": "smoother_bandwidth",
    "resample_threshold": "resample_threshold",
    "dt": "dt",
    "seed": "seed",
}


def apply_thread_cap() -> None:
    """Honor CAPNMPC_THREADS (0 or unset = automatic)."""
    raw = os.environ.get("CAPNMPC_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"CAPNMPC_THREADS must be an integer, got {raw!r}") from None
    if cap > 0:
        import numba

        numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))


def _parse_dotted_overrides(extras: list[str]) -> dict:
    """Turn ['--a.b', '3', '--c', 'x'] into {'a': {'b': 3}, 'c': 'x'}."""
    out: dict = {}
    i = 0
    while i < len(extras):
        token = extras[i]
        if not token.startswith("--") or i + 1 >= len(extras):
            raise ConfigError(f"expected '--dotted.path value' pairs, got {token!r}")
        raw = extras[i + 1]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        *parents, leaf = token[2:].split(".")
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {token!r} conflicts with an earlier value")
        node[leaf] = value
        i += 2
    return out


def _deep_update(base: dict, overrides: dict) -> dict:
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def load_config(path: str | None, extras: list[str]) -> dict:
    doc: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: line {exc.lineno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path}: expected a JSON object")
    _deep_update(doc, _parse_dotted_overrides(extras))
    return doc


def _build_solver(base: SolverConfig, solver_doc: dict, seed: int | None) -> SolverConfig:
    fields = {}
    for key, value in solver_doc.items():
        if key not in _SOLVER_KEYS:
            raise ConfigError(f"solver.{key}: unknown key; known: {sorted(_SOLVER_KEYS)}")
        fields[_SOLVER_KEYS[key]] = value
    if seed is not None:
        fields["seed"] = seed
    try:
        return dataclasses.replace(base, **fields)
    except (TypeError, ValueError) as exc:  # includes InvalidInputError
        raise ConfigError(f"solver: {exc}") from None


def _parse_inline_scenario(doc: dict) -> Scenario:
    try:
        road_doc = dict(doc["road"])
        road = RoadGeometry(**road_doc)
        obstacles = tuple(Obstacle(**dict(o)) for o in doc.get("obstacles", []))
        ego = VehicleState(*[float(x) for x in doc["ego_init"]])
        goal = np.asarray(doc["goal"], dtype=np.float64)
    except KeyError as exc:
        raise ConfigError(f"scenario: missing key {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ConfigError(f"scenario: {exc}") from None
    kwargs = dict(
        name=str(doc.get("name", "inline")),
        road=road,
        obstacles=obstacles,
        ego_init=ego,
        goal=goal,
        goal_mask=np.asarray(doc.get("goal_mask", [True, True, True, False]), dtype=bool),
        control_lower=np.asarray(doc.get("control_lower", [-3.0, -0.5]), dtype=np.float64),
        control_upper=np.asarray(doc.get("control_upper", [3.0, 0.5]), dtype=np.float64),
        episode_length=int(doc.get("episode_length", 150)),
        goal_tolerance=float(doc.get("goal_tolerance", 3.0)),
        reference_speed=float(doc.get("reference_speed", 8.0)),
    )
    for key in ("wheelbase", "vehicle_half_width", "safety_radius", "planning_margin"):
        if key in doc:
            kwargs[key] = float(doc[key])
    return Scenario(**kwargs)


def _apply_scenario_overrides(scenario: Scenario, overrides: dict) -> Scenario:
    if not overrides:
        return scenario
    fields = {}
    for key, value in overrides.items():
        if key == "ego_init":
            fields[key] = VehicleState(*[float(x) for x in value])
        elif key in ("goal", "goal_mask", "control_lower", "control_upper"):
            fields[key] = np.asarray(value)
        elif key in ("episode_length",):
            fields[key] = int(value)
        elif key in ("goal_tolerance", "reference_speed", "wheelbase",
                     "vehicle_half_width", "safety_radius", "planning_margin"):
            fields[key] = float(value)
        else:
            raise ConfigError(f"scenario_overrides.{key}: not an overridable field")
    return dataclasses.replace(scenario, **fields)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    solver: SolverConfig
    controller: str            # "bicycle" | "mlp"
    weights_path: str | None
    output_dir: str
    seed: int
    echo: dict


def parse_run_config(doc: dict) -> RunConfig:
    seed = int(doc.get("seed", 0))
    scenario_doc = doc.get("scenario", "scenario1")
    if isinstance(scenario_doc, str):
        scenario = builtin_scenario(scenario_doc, seed)
    elif isinstance(scenario_doc, dict):
        scenario = _parse_inline_scenario(scenario_doc)
    else:
        raise ConfigError("scenario: expected a builtin name or an inline object")
    scenario = _apply_scenario_overrides(scenario, doc.get("scenario_overrides", {}))
    solver = _build_solver(scenario.solver, doc.get("solver", {}), seed)
    scenario = dataclasses.replace(scenario, solver=solver)

    controller_doc = doc.get("controller", "bicycle")
    weights_path = None
    if controller_doc == "bicycle":
        controller = "bicycle"
    elif isinstance(controller_doc, dict) and "mlp" in controller_doc:
        controller = "mlp"
        weights_path = str(controller_doc["mlp"])
    elif isinstance(controller_doc, str) and controller_doc.startswith("mlp:"):
        controller = "mlp"
        weights_path = controller_doc[4:]
    else:
        raise ConfigError(
            f"controller: expected 'bicycle', 'mlp:<path>' or {{'mlp': path}}, got {controller_doc!r}")
    if weights_path is not None and not os.path.exists(weights_path):
        raise ConfigError(f"controller.mlp: weights file not found: {weights_path}")

    echo = {
        "scenario": scenario_doc if isinstance(scenario_doc, str) else dict(scenario_doc),
        "scenario_overrides": doc.get("scenario_overrides", {}),
        "controller": controller if controller == "bicycle" else f"mlp:{weights_path}",
        "seed": seed,
        "solver": {
            "H": solver.horizon,
            "N": solver.particles,
            "Q": solver.q_precision.tolist(),
            "R": solver.r_precision.tolist(),
            "alpha": solver.alpha,
            "beta": solver.beta,
            "eta_std": solver.eta_std,
            "smoother_bandwidth": solver.smoother_bandwidth,
            "resample_threshold": solver.resample_threshold,
            "dt": solver.dt,
            "seed": solver.seed,
        },
    }
    return RunConfig(scenario=scenario, solver=solver, controller=controller,
                     weights_path=weights_path,
                     output_dir=str(doc.get("output_dir", "capnmpc_out")),
                     seed=seed, echo=echo)


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_outputs(result, run_cfg: RunConfig) -> None:
    os.makedirs(run_cfg.output_dir, exist_ok=True)
    steps = len(result.states)
    with open(os.path.join(run_cfg.output_dir, "trajectory.csv"), "w", encoding="utf-8") as fh:
        fh.write("t,px,py,v,psi,a,delta\n")
        for t in range(steps):
            state = result.states[t]
            # the terminal row repeats the last applied control
            control = result.controls[min(t, len(result.controls) - 1)] \
                if len(result.controls) else np.zeros(2)
            cells = [str(t)] + [_fmt(x) for x in state] + [_fmt(u) for u in control]
            fh.write(",".join(cells) + "\n")
    with open(os.path.join(run_cfg.output_dir, "distances.csv"), "w", encoding="utf-8") as fh:
        fh.write("t,min_obstacle_distance,boundary_margin\n")
        for t in range(steps):
            fh.write(f"{t},{_fmt(result.min_obstacle_distance[t])},"
                     f"{_fmt(result.boundary_margin[t])}\n")
    metrics = {
        "success": bool(result.success),
        "collision": bool(result.collision),
        "steps_to_goal": result.steps_to_goal,
        "min_distance_overall": None if math.isinf(result.min_distance_overall)
        else float(result.min_distance_overall),
        "config_echo": run_cfg.echo,
        "seed": run_cfg.seed,
    }
    if result.failure_reason:
        metrics["failure_reason"] = result.failure_reason
    with open(os.path.join(run_cfg.output_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args: argparse.Namespace, extras: list[str]) -> int:
    doc = load_config(args.config, extras)
    run_cfg = parse_run_config(doc)
    if run_cfg.controller == "mlp":
        model = MlpDynamics(load_model(run_cfg.weights_path))
    else:
        model = BicycleModel(run_cfg.scenario.wheelbase)
    result = run_episode(run_cfg.scenario, model, run_cfg.solver,
                         StreamFamily(run_cfg.solver.seed))
    _write_outputs(result, run_cfg)
    status = "success" if result.success else \
        ("collision" if result.collision else (result.failure_reason or "timeout"))
    print(f"scenario={run_cfg.scenario.name} seed={run_cfg.seed} status={status} "
          f"steps={result.steps_to_goal} min_distance="
          f"{result.min_distance_overall:.3f}")
    return EXIT_OK if result.success else EXIT_PLANNING


def cmd_oracle_lq(args: argparse.Namespace) -> int:
    seeds = list(range(args.seed0, args.seed0 + args.seeds))
    result = run_lq_check(particles=args.particles, horizon=args.horizon,
                          seeds=seeds, smoother_bandwidth=args.bandwidth)
    print(f"dense-solve oracle u* = {result.oracle:.6f}")
    for seed, est, err, sec in zip(seeds, result.estimates, result.errors,
                                   result.seconds_per_seed):
        print(f"seed {seed:3d}: estimate {est: .6f}  |error| {err:.6f}  ({sec:.2f}s)")
    print(f"mean error {result.mean_error:.6f}  max error {result.max_error:.6f}")
    ok = result.max_error < 0.05 and result.mean_error < 0.02
    print("oracle check:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_PLANNING


def validation_report(model, samples: int, seed: int, wheelbase: float) -> dict:
    """Compare learned one-step predictions with the bicycle model on uniform draws."""
    if samples < 1:
        raise ConfigError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    lows = np.array([lo for lo, _ in VALIDATION_RANGES.values()])
    highs = np.array([hi for _, hi in VALIDATION_RANGES.values()])
    draws = rng.uniform(lows, highs, size=(samples, 6))
    states, controls = draws[:, :4], draws[:, 4:]
    dt = model.dt
    truth = bicycle_step_batch(states, controls, dt, wheelbase)
    pred = nn_step_batch(model, states, controls, dt)
    rate_err = (pred - truth) / dt
    rate_true = (truth - states) / dt
    channel_rmse = np.sqrt(np.mean((pred - truth) ** 2, axis=0))
    sigma = np.std(rate_true, axis=0)
    normalized = float(np.sqrt(np.mean((rate_err / sigma) ** 2)))
    return {
        "channels": ["px", "py", "v", "psi"],
        "rmse": channel_rmse.tolist(),
        "normalized_rmse": normalized,
        "samples": samples,
        "dt": dt,
    }


def cmd_validate_model(args: argparse.Namespace) -> int:
    model = load_model(args.weights)
    report = validation_report(model, args.samples, args.seed, args.wheelbase)
    for name, rmse in zip(report["channels"], report["rmse"]):
        print(f"{name:5s} one-step RMSE {rmse:.6g}")
    print(f"normalized RMSE {report['normalized_rmse']:.6g} "
          f"({report['samples']} samples, dt={report['dt']})")
    ok = report["normalized_rmse"] <= 0.05
    print("model check:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_PLANNING


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capnmpc",
        description="Sampling-based NMPC motion planner and its validation oracles.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario episode and write outputs")
    run.add_argument("--config", default=None, help="JSON config file")

    oracle = sub.add_parser("oracle-lq", help="check the estimator against the dense LQ solve")
    oracle.add_argument("--particles", type=int, default=5000)
    oracle.add_argument("--horizon", type=int, default=5)
    oracle.add_argument("--seeds", type=int, default=20)
    oracle.add_argument("--seed0", type=int, default=0)
    oracle.add_argument("--bandwidth", type=float, default=0.02)

    validate = sub.add_parser("validate-model", help="compare a weights file with the bicycle model")
    validate.add_argument("--weights", required=True)
    validate.add_argument("--samples", type=int, default=1000)
    validate.add_argument("--seed", type=int, default=0)
    validate.add_argument("--wheelbase", type=float, default=4.0)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    try:
        apply_thread_cap()
        if args.command == "run":
            return cmd_run(args, extras)
        if extras:
            parser.error(f"unrecognized arguments: {' '.join(extras)}")
        if args.command == "oracle-lq":
            return cmd_oracle_lq(args)
        if args.command == "validate-model":
            return cmd_validate_model(args)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, ModelFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

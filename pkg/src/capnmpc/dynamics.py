"""Vehicle state-transition models: analytic single-track and learned MLP.

Both models expose the same closed behavior (state, control, dt) -> state and
a batched `step` used inside the particle loops. The MLP side includes the
portable JSON weights-file loader shared with the training component.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ModelFormatError

STATE_DIM = 4
CONTROL_DIM = 2
STD_FLOOR = 1e-6
DEFAULT_WHEELBASE = 4.0


@dataclass(frozen=True)
class VehicleState:
    """Planar vehicle state: position east/north [m], speed [m/s], heading [rad].

    Heading is stored unwrapped; consumers needing wrapped angles wrap locally.
    """

    px: float
    py: float
    v: float
    psi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.v, self.psi], dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "VehicleState":
        px, py, v, psi = (float(x) for x in arr)
        return cls(px, py, v, psi)


@dataclass(frozen=True)
class ControlInput:
    """Actuation: longitudinal acceleration [m/s^2] and steering angle [rad]."""

    a: float
    delta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.delta], dtype=np.float64)

    @classmethod
    def from_array(cls, arr) -> "ControlInput":
        a, delta = (float(x) for x in arr)
        return cls(a, delta)


def bicycle_step_batch(states: np.ndarray, controls: np.ndarray, dt: float,
                       wheelbase: float = DEFAULT_WHEELBASE) -> np.ndarray:
    """Explicit-Euler kinematic bicycle step on (B, 4) states and (B, 2) controls.

    Derivatives are evaluated at the old state:
        px' = v cos(psi), py' = v sin(psi), v' = a, psi' = (v / wheelbase) tan(delta)
    """
    if dt <= 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    if wheelbase <= 0:
        raise InvalidInputError(f"wheelbase must be positive, got {wheelbase}")
    states = np.asarray(states, dtype=np.float64)
    controls = np.asarray(controls, dtype=np.float64)
    if not np.isfinite(states).all() or not np.isfinite(controls).all():
        raise InvalidInputError("non-finite state or control input")
    delta = controls[..., 1]
    if np.any(np.abs(delta) >= math.pi / 2):
        raise InvalidInputError("steering angle magnitude must be < pi/2")
    v = states[..., 2]
    psi = states[..., 3]
    out = np.empty_like(states)
    out[..., 0] = states[..., 0] + dt * v * np.cos(psi)
    out[..., 1] = states[..., 1] + dt * v * np.sin(psi)
    out[..., 2] = v + dt * controls[..., 0]
    out[..., 3] = psi + dt * (v / wheelbase) * np.tan(delta)
    return out


def bicycle_step(state: VehicleState, control: ControlInput, dt: float,
                 wheelbase: float = DEFAULT_WHEELBASE) -> VehicleState:
    """Single explicit-Euler step of the kinematic bicycle model."""
    nxt = bicycle_step_batch(state.as_array()[None, :], control.as_array()[None, :],
                             dt, wheelbase)[0]
    return VehicleState.from_array(nxt)


@dataclass(frozen=True)
class MlpLayer:
    """One dense layer; weights shaped (rows, cols), bias length rows."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class MlpModel:
    """Feedforward ReLU network with normalization statistics.

    The network maps normalized (state, control) to a normalized state-increment
    rate; hidden layers use max(0, .), the output layer is linear. `dt` records
    the sampling period the model was trained at.
    """

    layers: tuple[MlpLayer, ...]
    input_mean: np.ndarray
    input_std: np.ndarray
    output_mean: np.ndarray
    output_std: np.ndarray
    dt: float
    activation: str = "relu"

    @property
    def state_dim(self) -> int:
        return len(self.output_mean)

    @property
    def control_dim(self) -> int:
        return len(self.input_mean) - len(self.output_mean)

    def validate(self) -> None:
        if self.activation != "relu":
            raise ModelFormatError(f"activation: unsupported value {self.activation!r}")
        if not self.layers:
            raise ModelFormatError("layers: must contain at least one layer")
        if self.dt <= 0 or not math.isfinite(self.dt):
            raise ModelFormatError(f"dt: must be positive and finite, got {self.dt}")
        n_in = len(self.input_mean)
        n_out = len(self.output_mean)
        if len(self.input_std) != n_in:
            raise ModelFormatError("input_norm.std: length differs from input_norm.mean")
        if len(self.output_std) != n_out:
            raise ModelFormatError("output_norm.std: length differs from output_norm.mean")
        if n_in <= n_out:
            raise ModelFormatError(
                f"input_norm: length {n_in} must exceed output_norm length {n_out}")
        for name, std in (("input_norm.std", self.input_std), ("output_norm.std", self.output_std)):
            if np.any(std < STD_FLOOR):
                raise ModelFormatError(f"{name}: entries must be >= {STD_FLOOR}")
        if self.layers[0].cols != n_in:
            raise ModelFormatError(
                f"layers[0].cols: expected {n_in} (state_dim + control_dim), got {self.layers[0].cols}")
        if self.layers[-1].rows != n_out:
            raise ModelFormatError(
                f"layers[-1].rows: expected {n_out} (state_dim), got {self.layers[-1].rows}")
        for i in range(len(self.layers) - 1):
            if self.layers[i].rows != self.layers[i + 1].cols:
                raise ModelFormatError(
                    f"layers[{i + 1}].cols: expected {self.layers[i].rows} to chain "
                    f"with layers[{i}].rows, got {self.layers[i + 1].cols}")
        for i, layer in enumerate(self.layers):
            if layer.bias.shape != (layer.rows,):
                raise ModelFormatError(f"layers[{i}].bias: length {layer.bias.shape[0]} != rows {layer.rows}")


def mlp_forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Forward pass on normalized input; accepts a vector or a (B, d) batch."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[-1] != model.layers[0].cols:
        raise InvalidInputError(
            f"input width {h.shape[-1]} != first layer cols {model.layers[0].cols}")
    last = len(model.layers) - 1
    for i, layer in enumerate(model.layers):
        h = h @ layer.weights.T + layer.bias
        if i != last:
            h = np.maximum(h, 0.0)
    return h[0] if single else h


def nn_step_batch(model: MlpModel, states: np.ndarray, controls: np.ndarray,
                  dt: float) -> np.ndarray:
    """Batched learned step: s + dt * denormalized network rate prediction."""
    if dt <= 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    states = np.asarray(states, dtype=np.float64)
    controls = np.asarray(controls, dtype=np.float64)
    raw = np.concatenate([states, controls], axis=-1)
    z = (raw - model.input_mean) / model.input_std
    rate = mlp_forward(model, z) * model.output_std + model.output_mean
    return states + dt * rate


def nn_step(model: MlpModel, state: VehicleState, control: ControlInput,
            dt: float) -> VehicleState:
    """Single learned step of the vehicle state."""
    nxt = nn_step_batch(model, state.as_array()[None, :], control.as_array()[None, :], dt)[0]
    return VehicleState.from_array(nxt)


def _as_float_array(obj, name: str, length: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"{name}: not a numeric array ({exc})") from None
    if arr.ndim != 1:
        raise ModelFormatError(f"{name}: expected a flat array")
    if not np.isfinite(arr).all():
        raise ModelFormatError(f"{name}: contains non-finite values")
    if length is not None and arr.shape[0] != length:
        raise ModelFormatError(f"{name}: expected length {length}, got {arr.shape[0]}")
    return arr


def load_model(path: str | os.PathLike) -> MlpModel:
    """Load and validate a weights file; raises ModelFormatError naming any bad field."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"weights file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError("top level: expected a JSON object")
    for key in ("state_dim", "control_dim", "dt", "activation", "input_norm", "output_norm", "layers"):
        if key not in doc:
            raise ModelFormatError(f"{key}: missing required key")
    try:
        state_dim = int(doc["state_dim"])
        control_dim = int(doc["control_dim"])
    except (TypeError, ValueError):
        raise ModelFormatError("state_dim/control_dim: must be integers") from None
    if state_dim < 1 or control_dim < 1:
        raise ModelFormatError("state_dim/control_dim: must be >= 1")
    layers = []
    raw_layers = doc["layers"]
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ModelFormatError("layers: expected a non-empty array")
    for i, entry in enumerate(raw_layers):
        try:
            rows, cols = int(entry["rows"]), int(entry["cols"])
        except (TypeError, KeyError, ValueError):
            raise ModelFormatError(f"layers[{i}]: missing or non-integer rows/cols") from None
        flat = _as_float_array(entry.get("weights", []), f"layers[{i}].weights")
        if flat.shape[0] != rows * cols:
            raise ModelFormatError(
                f"layers[{i}].weights: expected {rows * cols} values (rows*cols), got {flat.shape[0]}")
        bias = _as_float_array(entry.get("bias", []), f"layers[{i}].bias", rows)
        layers.append(MlpLayer(weights=flat.reshape(rows, cols), bias=bias))
    n_in = state_dim + control_dim
    model = MlpModel(
        layers=tuple(layers),
        input_mean=_as_float_array(doc["input_norm"].get("mean"), "input_norm.mean", n_in),
        input_std=_as_float_array(doc["input_norm"].get("std"), "input_norm.std", n_in),
        output_mean=_as_float_array(doc["output_norm"].get("mean"), "output_norm.mean", state_dim),
        output_std=_as_float_array(doc["output_norm"].get("std"), "output_norm.std", state_dim),
        dt=float(doc["dt"]),
        activation=str(doc["activation"]),
    )
    model.validate()
    return model


def save_model(model: MlpModel, path: str | os.PathLike) -> None:
    """Write the weights file; full round-trip double precision, sorted keys."""
    model.validate()
    doc = {
        "state_dim": model.state_dim,
        "control_dim": model.control_dim,
        "dt": model.dt,
        "activation": model.activation,
        "input_norm": {"mean": model.input_mean.tolist(), "std": model.input_std.tolist()},
        "output_norm": {"mean": model.output_mean.tolist(), "std": model.output_std.tolist()},
        "layers": [
            {"rows": l.rows, "cols": l.cols, "weights": l.weights.ravel().tolist(),
             "bias": l.bias.tolist()}
            for l in model.layers
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


class BicycleModel:
    """Analytic single-track model exposed through the common model protocol."""

    state_dim = STATE_DIM
    control_dim = CONTROL_DIM

    def __init__(self, wheelbase: float = DEFAULT_WHEELBASE):
        if wheelbase <= 0:
            raise InvalidInputError(f"wheelbase must be positive, got {wheelbase}")
        self.wheelbase = wheelbase

    def step(self, states: np.ndarray, controls: np.ndarray, dt: float) -> np.ndarray:
        return bicycle_step_batch(states, controls, dt, self.wheelbase)

    def __call__(self, state: VehicleState, control: ControlInput, dt: float) -> VehicleState:
        return bicycle_step(state, control, dt, self.wheelbase)


class MlpDynamics:
    """Learned model exposed through the common model protocol."""

    def __init__(self, model: MlpModel):
        model.validate()
        self.model = model
        self.state_dim = model.state_dim
        self.control_dim = model.control_dim

    def step(self, states: np.ndarray, controls: np.ndarray, dt: float) -> np.ndarray:
        return nn_step_batch(self.model, states, controls, dt)

    def __call__(self, state: VehicleState, control: ControlInput, dt: float) -> VehicleState:
        return nn_step(self.model, state, control, dt)

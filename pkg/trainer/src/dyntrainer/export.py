"""Weights-file I/O: the bit-exact JSON contract with the inference engine.

The document carries state/control dims, dt, the activation tag, per-channel
normalization statistics, and row-major dense layers; floats are serialized at
full round-trip precision with sorted keys, so re-exporting a loaded file is
byte-stable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .model import NetworkWeights, forward
from .normalize import Normalizers
from .train import TrainedModel


@dataclass(frozen=True)
class WeightsFile:
    weights: NetworkWeights
    normalizers: Normalizers
    dt: float
    state_dim: int
    control_dim: int

    def predict_rates(self, inputs: np.ndarray) -> np.ndarray:
        z = self.normalizers.normalize_inputs(inputs)
        return self.normalizers.denormalize_outputs(forward(self.weights, z))


def _document(weights: NetworkWeights, norms: Normalizers, dt: float,
              state_dim: int, control_dim: int) -> dict:
    return {
        "state_dim": state_dim,
        "control_dim": control_dim,
        "dt": float(dt),
        "activation": "relu",
        "input_norm": {"mean": norms.input_mean.tolist(),
                       "std": norms.input_std.tolist()},
        "output_norm": {"mean": norms.output_mean.tolist(),
                        "std": norms.output_std.tolist()},
        "layers": [
            {"rows": int(w.shape[0]), "cols": int(w.shape[1]),
             "weights": w.ravel().tolist(), "bias": b.tolist()}
            for w, b in zip(weights.weights, weights.biases)
        ],
    }


def export_weights(model: TrainedModel, path: str | os.PathLike) -> None:
    """Write a trained model in the engine's weights-file format."""
    state_dim = len(model.normalizers.output_mean)
    control_dim = len(model.normalizers.input_mean) - state_dim
    doc = _document(model.weights, model.normalizers, model.dt, state_dim, control_dim)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_weights(path: str | os.PathLike) -> WeightsFile:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    layers = doc["layers"]
    weights = NetworkWeights(
        weights=tuple(np.asarray(l["weights"], dtype=np.float64).reshape(l["rows"], l["cols"])
                      for l in layers),
        biases=tuple(np.asarray(l["bias"], dtype=np.float64) for l in layers),
    )
    norms = Normalizers(
        input_mean=np.asarray(doc["input_norm"]["mean"], dtype=np.float64),
        input_std=np.asarray(doc["input_norm"]["std"], dtype=np.float64),
        output_mean=np.asarray(doc["output_norm"]["mean"], dtype=np.float64),
        output_std=np.asarray(doc["output_norm"]["std"], dtype=np.float64),
    )
    return WeightsFile(weights=weights, normalizers=norms, dt=float(doc["dt"]),
                       state_dim=int(doc["state_dim"]),
                       control_dim=int(doc["control_dim"]))


def reexport_weights(src: str | os.PathLike, dst: str | os.PathLike) -> None:
    """Rewrite an existing weights file in canonical form."""
    wf = load_weights(src)
    doc = _document(wf.weights, wf.normalizers, wf.dt, wf.state_dim, wf.control_dim)
    with open(dst, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")

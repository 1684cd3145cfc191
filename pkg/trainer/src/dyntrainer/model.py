"""Network definition and the canonical float64 forward pass.

Training runs through torch; everything downstream of training (validation,
export checks) evaluates the network with float64 numpy so the exported
weights file and the trainer agree to full double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch


def build_network(layer_sizes: tuple[int, ...], in_dim: int = 6, out_dim: int = 4,
                  seed: int = 0) -> torch.nn.Sequential:
    """ReLU MLP with the given hidden sizes; deterministic seeded init."""
    torch.manual_seed(seed)
    sizes = [in_dim, *layer_sizes, out_dim]
    modules: list[torch.nn.Module] = []
    for i in range(len(sizes) - 1):
        modules.append(torch.nn.Linear(sizes[i], sizes[i + 1]))
        if i < len(sizes) - 2:
            modules.append(torch.nn.ReLU())
    return torch.nn.Sequential(*modules)


@dataclass(frozen=True)
class NetworkWeights:
    """Plain float64 copies of the linear layers, in forward order."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    @classmethod
    def from_torch(cls, net: torch.nn.Sequential) -> "NetworkWeights":
        ws, bs = [], []
        for module in net:
            if isinstance(module, torch.nn.Linear):
                ws.append(module.weight.detach().cpu().numpy().astype(np.float64))
                bs.append(module.bias.detach().cpu().numpy().astype(np.float64))
        return cls(weights=tuple(ws), biases=tuple(bs))


def forward(weights: NetworkWeights, x: np.ndarray) -> np.ndarray:
    """Float64 forward pass on normalized inputs; ReLU on all but the last layer."""
    h = np.asarray(x, dtype=np.float64)
    last = len(weights.weights) - 1
    for i, (w, b) in enumerate(zip(weights.weights, weights.biases)):
        h = h @ w.T + b
        if i != last:
            h = np.maximum(h, 0.0)
    return h

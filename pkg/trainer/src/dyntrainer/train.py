"""Training loop: Adam on the mean squared error of normalized increments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .dataset import TransitionDataset
from .model import NetworkWeights, build_network, forward
from .normalize import STD_FLOOR, Normalizers, fit_normalizers


class TrainingError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")


@dataclass(frozen=True)
class TrainConfig:
    layer_sizes: tuple[int, ...] = (200, 300, 300, 100)
    learning_rate: float = 1e-3
    batch_size: int = 512
    epochs: int = 50
    test_split: float = 0.1
    seed: int = 0
    std_floor: float = STD_FLOOR

    def __post_init__(self):
        if not 0.0 < self.test_split < 1.0:
            raise ValueError("test_split must be in (0, 1)")
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("invalid training hyperparameters")


@dataclass(frozen=True)
class TrainedModel:
    weights: NetworkWeights
    normalizers: Normalizers
    dt: float
    train_loss_history: tuple[float, ...]  # full-train-set loss after each epoch
    test_loss: float

    def predict_rates(self, inputs: np.ndarray) -> np.ndarray:
        z = self.normalizers.normalize_inputs(inputs)
        return self.normalizers.denormalize_outputs(forward(self.weights, z))


def split_indices(rows: int, test_split: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    order = rng.permutation(rows)
    n_test = max(1, int(round(rows * test_split)))
    return order[n_test:], order[:n_test]


def train_mlp(ds: TransitionDataset, cfg: TrainConfig) -> TrainedModel:
    """Seed-deterministic Adam training; returns float64 weights and the loss history."""
    if ds.rows < 2:
        raise ValueError("need at least 2 rows to train")
    train_idx, test_idx = split_indices(ds.rows, cfg.test_split, cfg.seed)
    inputs = ds.inputs
    rates = ds.rates
    norms = fit_normalizers(inputs[train_idx], rates[train_idx], cfg.std_floor)

    x_train = norms.normalize_inputs(inputs[train_idx]).astype(np.float32)
    y_train = norms.normalize_outputs(rates[train_idx]).astype(np.float32)
    x_test = norms.normalize_inputs(inputs[test_idx]).astype(np.float32)
    y_test = norms.normalize_outputs(rates[test_idx]).astype(np.float32)

    net = build_network(cfg.layer_sizes, in_dim=inputs.shape[1],
                        out_dim=rates.shape[1], seed=cfg.seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    loss_fn = torch.nn.MSELoss()
    xt = torch.from_numpy(x_train)
    yt = torch.from_numpy(y_train)
    batch_rng = np.random.default_rng(cfg.seed + 1)

    history = []
    for epoch in range(cfg.epochs):
        order = batch_rng.permutation(len(x_train))
        for start in range(0, len(order), cfg.batch_size):
            batch = torch.from_numpy(order[start:start + cfg.batch_size])
            optimizer.zero_grad()
            loss = loss_fn(net(xt[batch]), yt[batch])
            loss.backward()
            optimizer.step()
        with torch.no_grad():
            epoch_loss = float(loss_fn(net(xt), yt))
        if not np.isfinite(epoch_loss):
            raise TrainingError(epoch)
        history.append(epoch_loss)

    with torch.no_grad():
        test_loss = float(loss_fn(net(torch.from_numpy(x_test)),
                                  torch.from_numpy(y_test)))
    return TrainedModel(weights=NetworkWeights.from_torch(net), normalizers=norms,
                        dt=ds.dt, train_loss_history=tuple(history),
                        test_loss=test_loss)


def normalized_test_rmse(model: TrainedModel, ds: TransitionDataset,
                         indices: np.ndarray | None = None) -> float:
    """RMSE in normalized target space, evaluated with the float64 forward pass."""
    inputs = ds.inputs if indices is None else ds.inputs[indices]
    rates = ds.rates if indices is None else ds.rates[indices]
    z = model.normalizers.normalize_inputs(inputs)
    pred = forward(model.weights, z)
    target = model.normalizers.normalize_outputs(rates)
    return float(np.sqrt(np.mean((pred - target) ** 2)))

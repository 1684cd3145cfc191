import numpy as np
import pytest

from dyntrainer.dataset import TransitionDataset, generate_dataset
from dyntrainer.train import (
    TrainConfig,
    TrainingError,
    normalized_test_rmse,
    split_indices,
    train_mlp,
)


def linear_dataset(rows=3000, seed=0, dt=0.2):
    """Targets linear in the inputs; exactly realizable by a ReLU network."""
    rng = np.random.default_rng(seed)
    inputs = rng.uniform(-1, 1, size=(rows, 6))
    matrix = rng.uniform(-0.5, 0.5, size=(4, 6))
    rates = inputs @ matrix.T
    return TransitionDataset(states=inputs[:, :4], controls=inputs[:, 4:],
                             deltas=rates * dt, dt=dt, seed=seed)


def test_linear_toy_reaches_small_test_mse():
    ds = linear_dataset()
    cfg = TrainConfig(layer_sizes=(32,), learning_rate=1e-2, batch_size=256,
                      epochs=60, seed=0)
    model = train_mlp(ds, cfg)
    assert model.test_loss < 1e-4


def test_zero_epoch_training_returns_initial_model():
    ds = generate_dataset(rows=400, seed=1)
    cfg = TrainConfig(layer_sizes=(16,), epochs=0, seed=1)
    model = train_mlp(ds, cfg)
    assert model.train_loss_history == ()
    assert np.isfinite(model.test_loss)
    assert len(model.weights.weights) == 2


def test_training_is_seed_deterministic():
    ds = generate_dataset(rows=600, seed=2)
    cfg = TrainConfig(layer_sizes=(16, 16), epochs=3, seed=5)
    a = train_mlp(ds, cfg)
    b = train_mlp(ds, cfg)
    for wa, wb in zip(a.weights.weights, b.weights.weights):
        assert np.array_equal(wa, wb)
    for ba, bb in zip(a.weights.biases, b.weights.biases):
        assert np.array_equal(ba, bb)
    assert a.train_loss_history == b.train_loss_history


def test_full_train_loss_non_increasing_at_default_rate():
    ds = generate_dataset(rows=2000, seed=3)
    cfg = TrainConfig(layer_sizes=(32, 32), learning_rate=1e-3, batch_size=256,
                      epochs=6, seed=3)
    model = train_mlp(ds, cfg)
    losses = model.train_loss_history
    for prev, nxt in zip(losses, losses[1:]):
        assert nxt <= prev * 1.05


def test_divergence_raises_with_epoch():
    ds = generate_dataset(rows=400, seed=4)
    cfg = TrainConfig(layer_sizes=(16,), learning_rate=1e18, epochs=5, seed=4)
    with pytest.raises(TrainingError) as err:
        train_mlp(ds, cfg)
    assert err.value.epoch >= 0


def test_split_indices_partition():
    train_idx, test_idx = split_indices(100, 0.1, 0)
    assert len(test_idx) == 10
    assert len(train_idx) == 90
    assert set(train_idx) | set(test_idx) == set(range(100))


def test_normalized_rmse_matches_test_loss():
    ds = generate_dataset(rows=1500, seed=8)
    cfg = TrainConfig(layer_sizes=(24,), epochs=4, seed=8)
    model = train_mlp(ds, cfg)
    _, test_idx = split_indices(ds.rows, cfg.test_split, cfg.seed)
    rmse = normalized_test_rmse(model, ds, test_idx)
    # float64 evaluation of the same float32 network; agreement is loose only
    # through the precision difference
    assert rmse == pytest.approx(np.sqrt(model.test_loss), rel=1e-4)

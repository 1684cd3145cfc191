"""Cross-component acceptance: trained-model fidelity and the weights contract.

These tests exercise both packages at once: the trainer produces artifacts and
the inference engine consumes them through the weights-file format alone.
"""

import numpy as np
import pytest

import capnmpc
from capnmpc.dynamics import bicycle_step_batch, load_model, mlp_forward
from capnmpc.planner import run_episode, scenario1
from capnmpc.rng import StreamFamily

from dyntrainer.dataset import generate_dataset
from dyntrainer.export import export_weights
from dyntrainer.model import forward
from dyntrainer.train import TrainConfig, normalized_test_rmse, split_indices, train_mlp


def report(num: int, name: str, ok: bool, detail: str = ""):
    print(f"[ACCEPTANCE {num}] {'PASS' if ok else 'FAIL'}: {name} {detail}".rstrip())
    assert ok, f"criterion {num} failed: {name} {detail}"


@pytest.fixture(scope="module")
def full_size_weights(tmp_path_factory):
    ds = generate_dataset(rows=100_000, dt=0.2, seed=0)
    cfg = TrainConfig()  # 200/300/300/100 layers, lr 1e-3, batch 512, 50 epochs
    model = train_mlp(ds, cfg)
    _, test_idx = split_indices(ds.rows, cfg.test_split, cfg.seed)
    rmse = normalized_test_rmse(model, ds, test_idx)
    path = tmp_path_factory.mktemp("weights") / "bicycle_mlp.json"
    export_weights(model, path)
    return str(path), rmse


def test_criterion_6_trained_model_fidelity(full_size_weights):
    path, rmse = full_size_weights
    rmse_ok = rmse <= 0.05

    engine_model = capnmpc.MlpDynamics(load_model(path))
    successes = 0
    details = []
    for seed in range(10):
        sc = scenario1(seed=seed)
        result = run_episode(sc, engine_model, sc.solver, StreamFamily(seed))
        ok = result.success and result.min_distance_overall > sc.safety_radius
        successes += ok
        details.append(f"seed{seed}:{'ok' if ok else 'fail'}")
    report(6, "trained network: one-step fidelity and closed-loop scenario 1",
           rmse_ok and successes >= 7,
           f"(normalized_rmse={rmse:.4f}, {successes}/10 closed-loop seeds; "
           f"{' '.join(details)})")


def test_criterion_7_cross_component_contract(full_size_weights):
    path, _ = full_size_weights
    engine_model = load_model(path)

    # forward-pass agreement on 100 shared normalized input vectors
    from dyntrainer.export import load_weights
    trainer_side = load_weights(path)
    rng = np.random.default_rng(42)
    vectors = rng.uniform(-3, 3, size=(100, 6))
    engine_out = mlp_forward(engine_model, vectors)
    trainer_out = forward(trainer_side.weights, vectors)
    forward_dev = float(np.max(np.abs(engine_out - trainer_out)))

    # delta targets match the engine's bicycle step on 1000 shared rows
    ds = generate_dataset(rows=1000, dt=0.2, seed=7)
    engine_next = bicycle_step_batch(ds.states, ds.controls, 0.2, ds.wheelbase)
    delta_dev = float(np.max(np.abs((ds.states + ds.deltas) - engine_next)))

    report(7, "weights-file and transition-target contract",
           forward_dev <= 1e-9 and delta_dev <= 1e-12,
           f"(forward_dev={forward_dev:.2e}, delta_dev={delta_dev:.2e})")

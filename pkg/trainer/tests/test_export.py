import numpy as np

from dyntrainer.dataset import generate_dataset
from dyntrainer.export import export_weights, load_weights, reexport_weights
from dyntrainer.normalize import fit_normalizers
from dyntrainer.train import TrainConfig, train_mlp, split_indices


def small_trained_model(seed=0):
    ds = generate_dataset(rows=500, seed=seed)
    cfg = TrainConfig(layer_sizes=(12, 8), epochs=2, seed=seed)
    return ds, cfg, train_mlp(ds, cfg)


def test_export_load_round_trip_bit_exact(tmp_path):
    ds, _, model = small_trained_model()
    path = tmp_path / "weights.json"
    export_weights(model, path)
    loaded = load_weights(path)
    rng = np.random.default_rng(0)
    inputs = rng.uniform(-2, 2, size=(50, 6))
    assert np.array_equal(model.predict_rates(inputs), loaded.predict_rates(inputs))
    assert loaded.state_dim == 4 and loaded.control_dim == 2
    assert loaded.dt == ds.dt


def test_reexport_is_byte_stable(tmp_path):
    _, _, model = small_trained_model(seed=1)
    first = tmp_path / "w1.json"
    second = tmp_path / "w2.json"
    export_weights(model, first)
    reexport_weights(first, second)
    assert first.read_bytes() == second.read_bytes()


def test_exported_stats_match_fit_normalizers(tmp_path):
    ds, cfg, model = small_trained_model(seed=2)
    train_idx, _ = split_indices(ds.rows, cfg.test_split, cfg.seed)
    norms = fit_normalizers(ds.inputs[train_idx], ds.rates[train_idx], cfg.std_floor)
    path = tmp_path / "w.json"
    export_weights(model, path)
    loaded = load_weights(path)
    assert np.array_equal(loaded.normalizers.input_mean, norms.input_mean)
    assert np.array_equal(loaded.normalizers.input_std, norms.input_std)
    assert np.array_equal(loaded.normalizers.output_mean, norms.output_mean)
    assert np.array_equal(loaded.normalizers.output_std, norms.output_std)

import numpy as np
import pytest

from dyntrainer.dataset import generate_dataset
from dyntrainer.normalize import STD_FLOOR, channel_stats, fit_normalizers


def test_constant_channel_hits_floor():
    values = np.column_stack([np.full(10, 3.0), np.arange(10.0)])
    mean, std = channel_stats(values)
    assert std[0] == STD_FLOOR
    assert mean[0] == 3.0


def test_two_point_channel_population_convention():
    mean, std = channel_stats(np.array([[0.0], [2.0]]))
    assert mean[0] == 1.0
    assert std[0] == 1.0  # population std, not sample std


def test_normalized_training_inputs_are_standardized():
    ds = generate_dataset(rows=5000, seed=6)
    norms = fit_normalizers(ds.inputs, ds.rates)
    z = norms.normalize_inputs(ds.inputs)
    assert np.all(np.abs(z.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(z.std(axis=0) - 1.0) < 1e-9)
    y = norms.normalize_outputs(ds.rates)
    assert np.all(np.abs(y.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(y.std(axis=0) - 1.0) < 1e-9)


def test_denormalize_inverts():
    ds = generate_dataset(rows=100, seed=7)
    norms = fit_normalizers(ds.inputs, ds.rates)
    z = norms.normalize_outputs(ds.rates)
    np.testing.assert_allclose(norms.denormalize_outputs(z), ds.rates, rtol=1e-12)


def test_requires_two_rows():
    with pytest.raises(ValueError):
        channel_stats(np.array([[1.0, 2.0]]))

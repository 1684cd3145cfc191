import os

import numpy as np
import pytest

from capnmpc.dynamics import MlpLayer, MlpModel
from capnmpc.estimator import warm_up_jit

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    # compile the smoother kernel once so timed tests measure the algorithm
    warm_up_jit()


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def zero_increment_mlp(dt: float = 0.2) -> MlpModel:
    """Single zero layer: the learned step becomes the identity map."""
    layer = MlpLayer(weights=np.zeros((4, 6)), bias=np.zeros(4))
    return MlpModel(layers=(layer,), input_mean=np.zeros(6), input_std=np.ones(6),
                    output_mean=np.zeros(4), output_std=np.ones(4), dt=dt)


def constant_rate_mlp(rate, dt: float = 0.2) -> MlpModel:
    """Single layer with zero weights and a bias: constant rate prediction."""
    layer = MlpLayer(weights=np.zeros((4, 6)), bias=np.asarray(rate, dtype=np.float64))
    return MlpModel(layers=(layer,), input_mean=np.zeros(6), input_std=np.ones(6),
                    output_mean=np.zeros(4), output_std=np.ones(4), dt=dt)

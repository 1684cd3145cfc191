"""Dataset generation and MLP training for the vehicle dynamics weights contract."""

from .bicycle import bicycle_step
from .dataset import TransitionDataset, generate_dataset, load_dataset, save_dataset
from .export import WeightsFile, export_weights, load_weights, reexport_weights
from .model import NetworkWeights, build_network, forward
from .normalize import Normalizers, channel_stats, fit_normalizers
from .train import TrainConfig, TrainedModel, TrainingError, normalized_test_rmse, train_mlp

__version__ = "0.1.0"

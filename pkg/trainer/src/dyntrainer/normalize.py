"""Per-channel normalization statistics (population convention, floored std)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-6


def channel_stats(values: np.ndarray, std_floor: float = STD_FLOOR) -> tuple[np.ndarray, np.ndarray]:
    """Population mean/std per column; std clamped below by std_floor."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] < 2:
        raise ValueError(f"need at least 2 rows to fit statistics, got {values.shape[0]}")
    mean = np.mean(values, axis=0)
    std = np.maximum(np.std(values, axis=0), std_floor)
    return mean, std


@dataclass(frozen=True)
class Normalizers:
    """Input stats over (state, control); output stats over increment rates."""

    input_mean: np.ndarray
    input_std: np.ndarray
    output_mean: np.ndarray
    output_std: np.ndarray

    def normalize_inputs(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.input_mean) / self.input_std

    def normalize_outputs(self, rates: np.ndarray) -> np.ndarray:
        return (rates - self.output_mean) / self.output_std

    def denormalize_outputs(self, z: np.ndarray) -> np.ndarray:
        return z * self.output_std + self.output_mean


def fit_normalizers(inputs: np.ndarray, rates: np.ndarray,
                    std_floor: float = STD_FLOOR) -> Normalizers:
    """Fit stats on the training split: inputs and increment-rate targets."""
    in_mean, in_std = channel_stats(inputs, std_floor)
    out_mean, out_std = channel_stats(rates, std_floor)
    return Normalizers(input_mean=in_mean, input_std=in_std,
                       output_mean=out_mean, output_std=out_std)

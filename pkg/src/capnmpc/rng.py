"""Counter-based random streams for reproducible particle sampling.

Every draw is keyed by (seed, lane, purpose, step), packed into a single
128-bit Philox key, so any consumer can regenerate any portion of the noise
independently of execution order or degree of parallelism. Within one keyed
draw of shape (N, d), row i is particle i's sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Purpose tags keep unrelated draws on disjoint keys.
CONTROL = 0
RESAMPLE = 1

_LANE_BITS = 32
_PURPOSE_BITS = 8
_STEP_BITS = 24


def _pack_key(seed: int, lane: int, purpose: int, step: int) -> int:
    if not 0 <= lane < (1 << _LANE_BITS):
        raise ValueError(f"lane {lane} out of range")
    if not 0 <= step < (1 << _STEP_BITS):
        raise ValueError(f"step {step} out of range")
    seed64 = seed % (1 << 64)
    return (seed64 << 64) | (lane << (_PURPOSE_BITS + _STEP_BITS)) | (purpose << _STEP_BITS) | step


@dataclass(frozen=True)
class StreamFamily:
    """A family of independent Philox streams rooted at (seed, lane).

    Lanes separate independent solver invocations (one per receding-horizon
    time step); purposes and steps separate draws inside one invocation.
    """

    seed: int
    lane_index: int = 0

    def lane(self, k: int) -> "StreamFamily":
        return StreamFamily(self.seed, k)

    def generator(self, purpose: int, step: int) -> np.random.Generator:
        key = _pack_key(self.seed, self.lane_index, purpose, step)
        return np.random.Generator(np.random.Philox(key=key))

    def control_normals(self, step: int, shape: tuple[int, ...]) -> np.ndarray:
        """Standard-normal block for control sampling at one horizon step."""
        return self.generator(CONTROL, step).standard_normal(shape)

    def resample_uniform(self, step: int) -> float:
        """The single uniform driving systematic resampling at one step."""
        return float(self.generator(RESAMPLE, step).random())

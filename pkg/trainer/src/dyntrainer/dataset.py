"""Transition dataset generation and CSV persistence.

Rows are (state, control, delta_x) with delta_x the one-step increment of the
bicycle model. The CSV has a single header line; dt, seed, and wheelbase ride
in a sidecar ``<path>.meta.json``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .bicycle import DEFAULT_WHEELBASE, bicycle_step

COLUMNS = ["px", "py", "v", "psi", "a", "delta", "dpx", "dpy", "dv", "dpsi"]

# Feasible sampling box; matches the planner's constraint sets.
DEFAULT_RANGES = {
    "px": (0.0, 100.0),
    "py": (-5.0, 5.0),
    "v": (0.0, 15.0),
    "psi": (-0.6, 0.6),
    "a": (-3.0, 3.0),
    "delta": (-0.5, 0.5),
}


@dataclass(frozen=True)
class TransitionDataset:
    states: np.ndarray   # (M, 4)
    controls: np.ndarray  # (M, 2)
    deltas: np.ndarray   # (M, 4) one-step increments
    dt: float
    seed: int
    wheelbase: float = DEFAULT_WHEELBASE

    @property
    def rows(self) -> int:
        return self.states.shape[0]

    @property
    def inputs(self) -> np.ndarray:
        return np.concatenate([self.states, self.controls], axis=1)

    @property
    def rates(self) -> np.ndarray:
        """Increment rates delta_x / dt, the quantity the network predicts."""
        return self.deltas / self.dt


def generate_dataset(rows: int, dt: float = 0.2, seed: int = 0,
                     ranges: dict | None = None,
                     wheelbase: float = DEFAULT_WHEELBASE) -> TransitionDataset:
    """Sample i.i.d. uniform (state, control) pairs and record bicycle increments."""
    if rows < 1:
        raise ValueError(f"rows must be >= 1, got {rows}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    ranges = dict(DEFAULT_RANGES if ranges is None else ranges)
    for key in DEFAULT_RANGES:
        lo, hi = ranges[key]
        if not lo < hi:
            raise ValueError(f"range for {key} is empty: ({lo}, {hi})")
    rng = np.random.default_rng(seed)
    lows = np.array([ranges[k][0] for k in DEFAULT_RANGES])
    highs = np.array([ranges[k][1] for k in DEFAULT_RANGES])
    draws = rng.uniform(lows, highs, size=(rows, 6))
    states, controls = draws[:, :4], draws[:, 4:]
    deltas = bicycle_step(states, controls, dt, wheelbase) - states
    return TransitionDataset(states=states, controls=controls, deltas=deltas,
                             dt=dt, seed=seed, wheelbase=wheelbase)


def save_dataset(ds: TransitionDataset, path: str | os.PathLike) -> None:
    table = np.concatenate([ds.states, ds.controls, ds.deltas], axis=1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for row in table:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    meta = {"dt": ds.dt, "seed": ds.seed, "rows": ds.rows, "wheelbase": ds.wheelbase}
    with open(f"{os.fspath(path)}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def load_dataset(path: str | os.PathLike) -> TransitionDataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.split(",") != COLUMNS:
            raise ValueError(f"unexpected dataset header: {header!r}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    meta_path = f"{os.fspath(path)}.meta.json"
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise FileNotFoundError(f"dataset sidecar not found: {meta_path}") from None
    return TransitionDataset(states=table[:, :4], controls=table[:, 4:6],
                             deltas=table[:, 6:], dt=float(meta["dt"]),
                             seed=int(meta["seed"]),
                             wheelbase=float(meta.get("wheelbase", DEFAULT_WHEELBASE)))

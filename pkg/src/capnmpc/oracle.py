"""Linear-Gaussian reference problem with an exact dense-solve answer.

The scalar integrator x_{t+1} = x_t + u_t tracked to a constant reference is
small enough that the posterior over the control sequence is an explicit
Gaussian; its mean is computed here by dense linear algebra, independent of
the particle machinery, and serves as the ground truth the sampling estimator
is checked against.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .estimator import ReferenceTrajectory, SolverConfig, nmpc_step, warm_up_jit
from .rng import StreamFamily


class ScalarIntegrator:
    """Test system x_{t+1} = x_t + u_t (the sampling period plays no role)."""

    state_dim = 1
    control_dim = 1

    def step(self, states: np.ndarray, controls: np.ndarray, dt: float) -> np.ndarray:
        return states + controls


def lq_posterior_mean(horizon: int, q: float, r: float, reference: float,
                      x0: float) -> np.ndarray:
    """Exact posterior mean of (u_0, ..., u_H) for the scalar integrator.

    Controls carry independent N(0, 1/q) priors; states x_t = x0 + sum_{s<t} u_s
    are observed as `reference` with noise variance 1/r for t = 1..H (the t = 0
    measurement does not depend on the controls).
    """
    n = horizon + 1
    lower = np.zeros((horizon, n))
    for t in range(1, horizon + 1):
        lower[t - 1, :t] = 1.0
    precision = q * np.eye(n) + r * (lower.T @ lower)
    rhs = r * lower.T @ np.full(horizon, reference - x0)
    return np.linalg.solve(precision, rhs)


@dataclass(frozen=True)
class LqCheckResult:
    oracle: float
    estimates: np.ndarray
    errors: np.ndarray
    seconds_per_seed: np.ndarray

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def max_error(self) -> float:
        return float(np.max(self.errors))


def run_lq_check(particles: int = 5000, horizon: int = 5, q: float = 1.0,
                 r: float = 1.0, reference: float = 1.0, x0: float = 0.0,
                 seeds: np.ndarray | list[int] | None = None,
                 smoother_bandwidth: float = 0.02) -> LqCheckResult:
    """Run the sampling estimator against the dense oracle over a seed sweep.

    Resampling is disabled so the check exercises pure importance weighting
    plus the backward reweighting pass.
    """
    if seeds is None:
        seeds = list(range(20))
    oracle = float(lq_posterior_mean(horizon, q, r, reference, x0)[0])
    model = ScalarIntegrator()
    refs = ReferenceTrajectory.constant([reference], [True], horizon)
    warm_up_jit()
    estimates = np.empty(len(seeds))
    seconds = np.empty(len(seeds))
    for i, seed in enumerate(seeds):
        cfg = SolverConfig(horizon=horizon, particles=particles,
                           q_precision=q, r_precision=r,
                           smoother_bandwidth=smoother_bandwidth,
                           resample_threshold=0.0, seed=int(seed))
        start = time.perf_counter()
        control = nmpc_step(model, None, refs, np.array([x0]), cfg,
                            StreamFamily(int(seed)))
        seconds[i] = time.perf_counter() - start
        estimates[i] = control[0]
    errors = np.abs(estimates - oracle)
    return LqCheckResult(oracle=oracle, estimates=estimates, errors=errors,
                         seconds_per_seed=seconds)

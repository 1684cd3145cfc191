"""Receding-horizon control as particle state estimation.

One horizon solve treats the reference as a sequence of virtual measurements
of an augmented system whose state is (x_t, u_t): the state evolves through
the dynamics model with no noise, the control is redrawn each step from a
zero-mean Gaussian with covariance Q^-1, and the measurement likelihood couples
a quadratic tracking term with a softplus barrier over the constraint values.
A bootstrap particle filter runs the horizon forward; a backward reweighting
pass turns the filtered weights into smoothed ones; the optimal control is the
smoothed posterior mean at the first step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit, prange

from .errors import (
    DegenerateHorizonError,
    DegenerateSmoothingError,
    InvalidInputError,
    InvalidTrajectoryError,
)
from .rng import StreamFamily

_LOG_2PI = math.log(2.0 * math.pi)
# beyond this, ln(1 + exp(z)) equals z to better than 1e-13 relative
_SOFTPLUS_LINEAR_CUTOFF = 30.0


@dataclass(frozen=True)
class SolverConfig:
    """All hyperparameters of one horizon solve.

    Q (control precision) and R (tracking precision) accept a scalar, a
    diagonal vector, or a full matrix; they are stored as full matrices.
    resample_threshold = 0 disables resampling entirely; 1 resamples at every
    step with non-uniform weights.
    """

    horizon: int
    particles: int
    q_precision: np.ndarray
    r_precision: np.ndarray
    alpha: float = 1.0
    beta: float = 5.0
    eta_std: float = 0.1
    smoother_bandwidth: float = 1e-2
    resample_threshold: float = 0.5
    seed: int = 0
    dt: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "q_precision", _as_matrix(self.q_precision, "Q"))
        object.__setattr__(self, "r_precision", _as_matrix(self.r_precision, "R"))
        if self.horizon < 1:
            raise InvalidInputError(f"H must be >= 1, got {self.horizon}")
        if self.particles < 1:
            raise InvalidInputError(f"N must be >= 1, got {self.particles}")
        try:
            np.linalg.cholesky(self.q_precision)
        except np.linalg.LinAlgError:
            raise InvalidInputError("Q must be symmetric positive definite") from None
        r = self.r_precision
        if not np.allclose(r, r.T) or np.any(np.linalg.eigvalsh(r) < -1e-12):
            raise InvalidInputError("R must be symmetric positive semidefinite")
        for name in ("alpha", "beta", "eta_std", "smoother_bandwidth", "dt"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        if not 0.0 <= self.resample_threshold <= 1.0:
            raise InvalidInputError("resample_threshold must be in [0, 1]")

    @property
    def n_u(self) -> int:
        return self.q_precision.shape[0]

    @property
    def n_x(self) -> int:
        return self.r_precision.shape[0]

    @cached_property
    def control_noise_transform(self) -> np.ndarray:
        """Matrix T with cov(z @ T) = Q^-1 for standard-normal rows z."""
        chol = np.linalg.cholesky(self.q_precision)
        return np.linalg.inv(chol)

    @cached_property
    def q_logdet(self) -> float:
        sign, logdet = np.linalg.slogdet(self.q_precision)
        return float(logdet)


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = np.diag(arr)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"{name} must be square")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class AugmentedParticle:
    """One sampled point of the augmented (state, control) chain."""

    state: np.ndarray
    control: np.ndarray
    log_weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "state", np.asarray(self.state, dtype=np.float64))
        object.__setattr__(self, "control", np.asarray(self.control, dtype=np.float64))
        if math.isnan(self.log_weight):
            raise InvalidInputError("log_weight must be finite or -inf, got NaN")


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Per-step reference states with a boolean mask of penalized channels."""

    states: np.ndarray  # (H+1, n_x)
    mask: np.ndarray    # (H+1, n_x) bool

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=np.float64))
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim == 1:
            mask = np.broadcast_to(mask, states.shape).copy()
        if mask.shape != states.shape:
            raise InvalidInputError("reference mask shape must match reference states")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def constant(cls, ref, mask, horizon: int) -> "ReferenceTrajectory":
        ref = np.asarray(ref, dtype=np.float64)
        states = np.tile(ref, (horizon + 1, 1))
        return cls(states=states, mask=np.asarray(mask, dtype=bool))

    def __len__(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class ParticleHistory:
    """Forward-filter output: per-step particles, weights, resampling lineage.

    Weights at step t are the normalized filter weights before any resampling;
    ancestors[t][i] is the index in step t-1's arrays that particle i was
    propagated from (arange when no resampling occurred).
    """

    states: np.ndarray     # (H+1, N, n_x)
    controls: np.ndarray   # (H+1, N, n_u)
    weights: np.ndarray    # (H+1, N)
    ancestors: np.ndarray  # (H+1, N) int

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def particles(self) -> int:
        return self.states.shape[1]


def softplus_barrier(s, alpha: float, beta: float):
    """Softplus penalty (1/alpha) * ln(1 + exp(beta * s)); linear tail above beta*s > 30."""
    z = np.multiply(beta, s, dtype=np.float64)
    out = np.where(z > _SOFTPLUS_LINEAR_CUTOFF, z, np.log1p(np.exp(np.minimum(z, _SOFTPLUS_LINEAR_CUTOFF)))) / alpha
    if np.ndim(s) == 0:
        return float(out)
    return out


def _batch_loglik(states: np.ndarray, ref: np.ndarray, mask: np.ndarray,
                  g_values: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    """Measurement log-likelihood (constants dropped) for a batch of particles."""
    diff = np.where(mask, states - ref, 0.0)
    quad = np.einsum("bi,ij,bj->b", diff, cfg.r_precision, diff)
    out = -0.5 * quad
    if g_values.size:
        phi = softplus_barrier(g_values, cfg.alpha, cfg.beta)
        with np.errstate(over="ignore"):  # overflowing barriers map to -inf by contract
            out = out - np.sum(phi * phi, axis=-1) / (2.0 * cfg.eta_std**2)
    return out


def measurement_loglik(particle: AugmentedParticle, ref, mask, g_values,
                       cfg: SolverConfig) -> float:
    """Log p(virtual measurement | particle): tracking quadratic plus barrier term."""
    if g_values is None:
        g = np.empty((1, 0))
    else:
        g = np.atleast_1d(np.asarray(g_values, dtype=np.float64)).reshape(1, -1)
    value = _batch_loglik(particle.state[None, :], np.asarray(ref, dtype=np.float64),
                          np.asarray(mask, dtype=bool), g, cfg)[0]
    return float(value)


def propagate(particle: AugmentedParticle, model, cfg: SolverConfig,
              rng: np.random.Generator) -> AugmentedParticle:
    """Bootstrap proposal: deterministic state transition, fresh N(0, Q^-1) control."""
    next_state = model.step(particle.state[None, :], particle.control[None, :], cfg.dt)[0]
    z = rng.standard_normal(cfg.n_u)
    next_control = cfg.control_noise_transform.T @ z
    return AugmentedParticle(state=next_state, control=next_control,
                             log_weight=particle.log_weight)


def effective_sample_size(weights: np.ndarray) -> float:
    """ESS = 1 / sum(w^2) of normalized weights; in [1, N]."""
    w = np.asarray(weights, dtype=np.float64)
    return float(1.0 / np.sum(w * w))


def systematic_resample(weights: np.ndarray, rng: np.random.Generator | None = None,
                        count: int | None = None, u: float | None = None) -> np.ndarray:
    """Systematic resampling: thresholds (u+i)/count against the weight cumsum.

    Returns `count` sorted ancestor indices. Either an rng or the uniform draw
    u itself may be supplied.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = count if count is not None else len(w)
    if u is None:
        u = float(rng.random())
    positions = (u + np.arange(n)) / n
    cumulative = np.cumsum(w)
    cumulative[-1] = 1.0  # guard the final cell against rounding
    return np.searchsorted(cumulative, positions, side="right").astype(np.int64)


def _normalize_log_weights(log_w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (weights, normalized log-weights) via log-sum-exp."""
    m = np.max(log_w)
    shifted = np.exp(log_w - m)
    total = np.sum(shifted)
    weights = shifted / total
    return weights, log_w - (m + np.log(total))


def forward_filter(model, constraints, refs: ReferenceTrajectory, x0: np.ndarray,
                   cfg: SolverConfig, streams: StreamFamily,
                   u_shift: np.ndarray | None = None) -> ParticleHistory:
    """Run the bootstrap filter over one horizon.

    Particles start at the known state x0 with controls drawn around u_shift
    (the warm start; zero when absent). Later steps propagate, weight against
    the reference and constraint measurements, and resample when the effective
    sample size falls below resample_threshold * N.
    """
    if len(refs) != cfg.horizon + 1:
        raise InvalidInputError(
            f"reference trajectory length {len(refs)} != horizon + 1 = {cfg.horizon + 1}")
    x0 = np.asarray(x0, dtype=np.float64)
    n_x, n_u = len(x0), cfg.n_u
    h, n = cfg.horizon, cfg.particles
    transform = cfg.control_noise_transform

    states = np.empty((h + 1, n, n_x))
    controls = np.empty((h + 1, n, n_u))
    weights = np.empty((h + 1, n))
    ancestors = np.empty((h + 1, n), dtype=np.int64)

    states[0] = x0
    shift = np.zeros(n_u) if u_shift is None else np.asarray(u_shift, dtype=np.float64)
    controls[0] = shift + streams.control_normals(0, (n, n_u)) @ transform
    weights[0] = 1.0 / n
    ancestors[0] = np.arange(n)
    log_w = np.full(n, -math.log(n))

    for t in range(1, h + 1):
        if effective_sample_size(weights[t - 1]) < cfg.resample_threshold * n:
            idx = systematic_resample(weights[t - 1], count=n,
                                      u=streams.resample_uniform(t))
            base = np.full(n, -math.log(n))
        else:
            idx = np.arange(n)
            base = log_w
        ancestors[t] = idx
        states[t] = model.step(states[t - 1][idx], controls[t - 1][idx], cfg.dt)
        controls[t] = streams.control_normals(t, (n, n_u)) @ transform
        if constraints is not None:
            g = constraints.evaluate(states[t], controls[t], t)
        else:
            g = np.empty((n, 0))
        loglik = _batch_loglik(states[t], refs.states[t], refs.mask[t], g, cfg)
        if np.isnan(loglik).any():
            raise InvalidInputError(f"NaN measurement log-likelihood at horizon step {t}")
        candidate = base + loglik
        if np.all(np.isneginf(candidate)):
            raise DegenerateHorizonError(t)
        weights[t], log_w = _normalize_log_weights(candidate)

    return ParticleHistory(states=states, controls=controls, weights=weights,
                           ancestors=ancestors)


def transition_logdensity(from_p: AugmentedParticle, to_p: AugmentedParticle,
                          model, cfg: SolverConfig) -> float:
    """Log density of the relaxed augmented transition.

    The control factor is N(0, Q^-1); the noiseless state transition is relaxed
    to an isotropic Gaussian with variance smoother_bandwidth^2.
    """
    pred = model.step(from_p.state[None, :], from_p.control[None, :], cfg.dt)[0]
    eps = cfg.smoother_bandwidth**2
    n_x = len(pred)
    d = to_p.state - pred
    state_term = -0.5 * float(d @ d) / eps - 0.5 * n_x * (_LOG_2PI + math.log(eps))
    u = to_p.control
    ctrl_term = (-0.5 * float(u @ cfg.q_precision @ u)
                 - 0.5 * cfg.n_u * _LOG_2PI + 0.5 * cfg.q_logdet)
    return state_term + ctrl_term


@njit(parallel=True, fastmath={"contract", "reassoc", "nsz"}, cache=True)
def _kernel_lse(points: np.ndarray, centers: np.ndarray, log_c: np.ndarray,
                inv_two_eps: float) -> np.ndarray:  # pragma: no cover - jitted
    """out[i] = logsumexp_j(log_c[j] - ||points[i] - centers[j]||^2 * inv_two_eps).

    Each output row is computed independently by one thread with a fixed
    sequential inner order, so results are bit-identical for any thread count.
    """
    n_i = points.shape[0]
    n_j = centers.shape[0]
    dim = points.shape[1]
    out = np.empty(n_i)
    for i in prange(n_i):
        m = -np.inf
        for j in range(n_j):
            d2 = 0.0
            for c in range(dim):
                d = points[i, c] - centers[j, c]
                d2 += d * d
            v = log_c[j] - d2 * inv_two_eps
            if v > m:
                m = v
        if m == -np.inf:
            out[i] = -np.inf
            continue
        s = 0.0
        for j in range(n_j):
            d2 = 0.0
            for c in range(dim):
                d = points[i, c] - centers[j, c]
                d2 += d * d
            v = log_c[j] - d2 * inv_two_eps - m
            # skip fully/gradually underflowing terms (< 1e-308; avoids the
            # subnormal slow path without affecting the sum at any tested tolerance)
            if v > -708.0:
                s += math.exp(v)
        out[i] = m + math.log(s)
    return out


def _safe_log(w: np.ndarray) -> np.ndarray:
    out = np.full_like(w, -np.inf)
    pos = w > 0
    out[pos] = np.log(w[pos])
    return out


def backward_smooth(hist: ParticleHistory, model, cfg: SolverConfig) -> np.ndarray:
    """Backward reweighting pass; returns smoothed weights of shape (H+1, N).

    The last step's smoothed weights equal the filter weights; earlier steps
    follow the double-sum reweighting recursion evaluated in the log domain.
    Constant factors of the transition density cancel between the numerator
    and the denominator and are omitted.
    """
    h1, n, _ = hist.states.shape
    smoothed = np.empty((h1, n))
    smoothed[-1] = hist.weights[-1]
    log_sw_next = _safe_log(smoothed[-1])
    inv_two_eps = 1.0 / (2.0 * cfg.smoother_bandwidth**2)

    for t in range(h1 - 2, -1, -1):
        pred = model.step(hist.states[t], hist.controls[t], cfg.dt)
        pred = np.ascontiguousarray(pred)
        nxt = np.ascontiguousarray(hist.states[t + 1])
        log_w = _safe_log(hist.weights[t])
        log_den = _kernel_lse(nxt, pred, log_w, inv_two_eps)
        alive = log_sw_next > -np.inf
        if np.any(alive & np.isneginf(log_den)):
            raise DegenerateSmoothingError(
                f"zero reweighting denominator at horizon step {t}")
        with np.errstate(invalid="ignore"):  # dead particles: -inf minus -inf
            ratio = np.where(alive, log_sw_next - log_den, -np.inf)
        log_sw = log_w + _kernel_lse(pred, nxt, ratio, inv_two_eps)
        if np.all(np.isneginf(log_sw)):
            raise DegenerateSmoothingError(
                f"all smoothed weights vanished at horizon step {t}")
        smoothed[t] = np.exp(log_sw)
        log_sw_next = log_sw
    return smoothed


def point_estimate(states: np.ndarray, controls: np.ndarray,
                   weights: np.ndarray) -> AugmentedParticle:
    """Weighted mean of particle states and controls."""
    w = np.asarray(weights, dtype=np.float64)
    w = w / np.sum(w)
    return AugmentedParticle(state=w @ np.asarray(states, dtype=np.float64),
                             control=w @ np.asarray(controls, dtype=np.float64))


def trajectory_logposterior(states: np.ndarray, controls: np.ndarray,
                            refs: ReferenceTrajectory, constraints,
                            cfg: SolverConfig, model) -> float:
    """Log posterior (additive constants dropped) of a dynamics-consistent trajectory.

    Raises InvalidTrajectoryError when states do not follow the model within 1e-9.
    """
    states = np.asarray(states, dtype=np.float64)
    controls = np.asarray(controls, dtype=np.float64)
    steps = states.shape[0]
    if steps >= 2:
        pred = model.step(states[:-1], controls[:-1], cfg.dt)
        err = np.max(np.abs(pred - states[1:]))
        if err > 1e-9:
            raise InvalidTrajectoryError(
                f"states deviate from the model by {err:.3e} (> 1e-9)")
    total = 0.0
    for t in range(steps):
        u = controls[t]
        total -= 0.5 * float(u @ cfg.q_precision @ u)
        if constraints is not None:
            g = constraints.evaluate(states[t][None, :], controls[t][None, :], t)
        else:
            g = np.empty((1, 0))
        total += float(_batch_loglik(states[t][None, :], refs.states[t], refs.mask[t],
                                     g, cfg)[0])
    return total


def solve_horizon(model, constraints, refs: ReferenceTrajectory, x0: np.ndarray,
                  cfg: SolverConfig, streams: StreamFamily,
                  u_shift: np.ndarray | None = None
                  ) -> tuple[ParticleHistory, np.ndarray]:
    """Filter forward, smooth backward; returns (history, smoothed weights)."""
    hist = forward_filter(model, constraints, refs, x0, cfg, streams, u_shift)
    smoothed = backward_smooth(hist, model, cfg)
    return hist, smoothed


def nmpc_step(model, constraints, refs: ReferenceTrajectory, x0: np.ndarray,
              cfg: SolverConfig, streams: StreamFamily,
              u_shift: np.ndarray | None = None) -> np.ndarray:
    """One receding-horizon solve; returns the control to apply now."""
    hist, smoothed = solve_horizon(model, constraints, refs, x0, cfg, streams, u_shift)
    est = point_estimate(hist.states[0], hist.controls[0], smoothed[0])
    return est.control


def warm_up_jit() -> None:
    """Force numba compilation of the smoother kernel (excluded from timings)."""
    pts = np.zeros((2, 1))
    _kernel_lse(pts, pts, np.zeros(2), 1.0)

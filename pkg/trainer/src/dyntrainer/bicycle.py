"""Kinematic bicycle step used to generate training transitions.

This mirrors the inference engine's analytic model; the shared-contract test
suite cross-checks the two implementations to 1e-12.
"""

import numpy as np

DEFAULT_WHEELBASE = 4.0


def bicycle_step(states: np.ndarray, controls: np.ndarray, dt: float,
                 wheelbase: float = DEFAULT_WHEELBASE) -> np.ndarray:
    """Explicit Euler on (B, 4) states [px, py, v, psi] and (B, 2) controls [a, delta]."""
    states = np.asarray(states, dtype=np.float64)
    controls = np.asarray(controls, dtype=np.float64)
    v = states[..., 2]
    psi = states[..., 3]
    out = np.empty_like(states)
    out[..., 0] = states[..., 0] + dt * v * np.cos(psi)
    out[..., 1] = states[..., 1] + dt * v * np.sin(psi)
    out[..., 2] = v + dt * controls[..., 0]
    out[..., 3] = psi + dt * (v / wheelbase) * np.tan(controls[..., 1])
    return out

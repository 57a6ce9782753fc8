"""
Integrators - classical Runge-Kutta stepping, sampled integration and section crossings
"""
import logging
from typing import Callable, Tuple

import numpy as np

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray]


def rk4_step(field: VectorField, state: np.ndarray, h: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of an autonomous field"""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    k1 = field(state)
    k2 = field(state + 0.5 * h * k1)
    k3 = field(state + 0.5 * h * k2)
    k4 = field(state + h * k3)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def is_whole_steps(length: float, dt: float) -> bool:
    """True when `length` is an integer multiple of `dt` up to rounding"""
    steps = length / dt
    return abs(steps - round(steps)) <= 1e-9 * max(1.0, steps)


def sample_count(t_span: Tuple[float, float], dt: float) -> int:
    """Number of samples on the uniform grid t0, t0 + dt, ..., t1"""
    t0, t1 = t_span
    if not dt > 0:
        raise ValueError(f"sampling interval must be positive, got {dt}")
    if t1 < t0:
        raise ValueError(f"time span end {t1} precedes start {t0}")
    n_steps = int(round((t1 - t0) / dt))
    if not is_whole_steps(t1 - t0, dt):
        raise ValueError(f"time span {t_span} is not a whole number of steps of {dt}")
    return n_steps + 1


def integrate(
    field: VectorField,
    r0: np.ndarray,
    t_span: Tuple[float, float],
    dt: float,
    substeps: int = 100,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate from r0 and sample every dt, taking `substeps` RK4 steps per sample.

    r0 may be a single state (d,) or a batch (B, d); states come back as (K, d) or (K, B, d).

    Returns:
        (times, states)
    """
    if substeps < 1:
        raise ValueError(f"substeps must be at least 1, got {substeps}")
    n_samples = sample_count(t_span, dt)
    h = dt / substeps
    state = np.array(r0, dtype=np.float64)
    states = np.empty((n_samples,) + state.shape)
    states[0] = state
    for k in range(1, n_samples):
        for _ in range(substeps):
            state = rk4_step(field, state, h)
        states[k] = state
    times = t_span[0] + dt * np.arange(n_samples)
    return times, states


def section_crossings(times: np.ndarray, values: np.ndarray, level: float = 0.0) -> np.ndarray:
    """Times at which `values` crosses `level` upward, located by linear interpolation"""
    values = np.asarray(values, dtype=np.float64) - level
    below = values[:-1] < 0
    above = values[1:] >= 0
    idx = np.nonzero(below & above)[0]
    fraction = -values[idx] / (values[idx + 1] - values[idx])
    return times[idx] + fraction * (times[idx + 1] - times[idx])


def orbit_period(times: np.ndarray, values: np.ndarray, level: float = 0.0) -> float:
    """Mean interval between successive upward crossings"""
    crossings = section_crossings(times, values, level)
    if len(crossings) < 2:
        raise ValueError(f"need at least two section crossings to estimate a period, found {len(crossings)}")
    return float(np.mean(np.diff(crossings)))

"""
Finite Differences - derivative estimates from sampled series
"""
import numpy as np


def finite_difference_derivatives(states: np.ndarray, dt: float) -> np.ndarray:
    """
    Second-order derivative estimate along axis 0: central differences in the interior,
    one-sided three-point formulas at both ends.
    """
    x = np.asarray(states, dtype=np.float64)
    if x.shape[0] < 3:
        raise ValueError(f"finite differencing needs at least 3 samples, got {x.shape[0]}")
    if not dt > 0:
        raise ValueError(f"sampling interval must be positive, got {dt}")
    out = np.empty_like(x)
    out[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt)
    out[-1] = (3.0 * x[-1] - 4.0 * x[-2] + x[-3]) / (2.0 * dt)
    return out

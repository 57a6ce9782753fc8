"""
Forecast Metrics
"""
from typing import Dict, Optional

import numpy as np

from hamiltonet.error_utils import EnergyScaleError

ENERGY_SCALE_FLOOR = 1e-12


def energy_drift(energy: np.ndarray) -> Dict[str, float]:
    """
    relative_std = std(E) / |mean(E)| (population std);
    max_relative_deviation = max |E - E(t0)| / |E(t0)|, NaN when E(t0) is zero.

    Raises:
        EnergyScaleError: |mean(E)| below ENERGY_SCALE_FLOOR
    """
    E = np.asarray(energy, dtype=np.float64).ravel()
    if E.size == 0:
        raise ValueError("empty energy series")
    mean = float(np.mean(E))
    if abs(mean) < ENERGY_SCALE_FLOOR:
        raise EnergyScaleError()
    deviation = np.max(np.abs(E - E[0]))
    return {
        'relative_std': float(np.std(E) / abs(mean)),
        'max_relative_deviation': float(deviation / abs(E[0])) if abs(E[0]) >= ENERGY_SCALE_FLOOR else float('nan'),
    }


def trajectory_mse(
    forecast: np.ndarray,
    reference: np.ndarray,
    times: Optional[np.ndarray] = None,
    t_max: Optional[float] = None,
) -> float:
    """Mean over time of the squared error summed over components, optionally up to t_max"""
    n = min(len(forecast), len(reference))
    error = np.sum((np.asarray(forecast[:n]) - np.asarray(reference[:n])) ** 2, axis=-1)
    if t_max is not None and times is not None:
        error = error[np.asarray(times[:n]) <= t_max + 1e-12]
    if error.size == 0:
        return float('nan')
    return float(np.mean(error))


def safe_energy_drift(energy: Optional[np.ndarray]) -> Dict[str, float]:
    """energy_drift with NaN metrics for missing or degenerate series"""
    if energy is None or len(energy) == 0:
        return {'relative_std': float('nan'), 'max_relative_deviation': float('nan')}
    try:
        return energy_drift(energy)
    except EnergyScaleError:
        return {'relative_std': float('nan'), 'max_relative_deviation': float('nan')}

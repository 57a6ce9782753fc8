"""
Rollout - RK4 integration of a learned (or true) vector field from one initial condition
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from hamiltonet.error_utils import DomainError
from hamiltonet.models import DynamicsModel
from hamiltonet.systems import BenchmarkSystem
from hamiltonet.systems.integrators import rk4_step, sample_count

logger = logging.getLogger(__name__)

DIVERGENCE_THRESHOLD = 1e6


class SystemOracle:
    """Ground-truth system presented through the model interface"""

    kind_label = "oracle"

    def __init__(self, system: BenchmarkSystem):
        self.system = system
        self.d = system.d

    def vector_field(self, r: np.ndarray) -> np.ndarray:
        return self.system.vector_field(r)

    def learned_hamiltonian(self, r: np.ndarray) -> Optional[np.ndarray]:
        return None


Field = Union[DynamicsModel, SystemOracle, Callable[[np.ndarray], np.ndarray]]


@dataclass
class Rollout:
    times: np.ndarray
    states: np.ndarray
    diverged: bool = False
    reason: str = ""

    def __len__(self) -> int:
        return len(self.times)


def _as_field(model: Field) -> Callable[[np.ndarray], np.ndarray]:
    return model.vector_field if hasattr(model, 'vector_field') else model


def rollout(
    model: Field,
    r0: np.ndarray,
    T: float,
    h: float,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
    state_check: Optional[Callable[[np.ndarray], None]] = None,
) -> Rollout:
    """
    Integrate with step h up to T. Stops early, flagging divergence, when a component
    exceeds the threshold, the state leaves the domain or the field fails (for example a
    singular gHNN Jacobian).

    Raises:
        DomainError: when the field cannot be evaluated at r0
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    n_samples = sample_count((0.0, T), h)
    field = _as_field(model)
    state = np.array(r0, dtype=np.float64)

    if state_check is not None:
        state_check(state)
    v0 = field(state)
    if not np.all(np.isfinite(v0)):
        raise DomainError("vector field is not finite at the initial condition")

    states = np.empty((n_samples,) + state.shape)
    states[0] = state
    diverged, reason, count = False, "", 1
    for k in range(1, n_samples):
        try:
            state = rk4_step(field, state, h)
            if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > divergence_threshold:
                raise DomainError(f"state exceeded {divergence_threshold:g}")
            if state_check is not None:
                state_check(state)
        except DomainError as exc:
            diverged, reason = True, f"t={k * h:.4g}: {exc}"
            logger.debug(f"Rollout diverged at {reason}")
            break
        states[k] = state
        count += 1

    times = h * np.arange(count)
    return Rollout(times, states[:count], diverged, reason)

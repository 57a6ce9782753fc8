"""
Jacobian Inversion - exact solves, truncated pseudo-inverses and the policy choosing between them
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Mapping, Tuple

import numpy as np

from hamiltonet.error_utils import ConfigError, DomainError, SingularJacobianError, SvdFailureError

logger = logging.getLogger(__name__)

MAX_EPSILON = 1e-3


class InversionMode(Enum):
    EXACT_SOLVE = "exact_solve"
    PSEUDO_INVERSE = "pseudo_inverse"


class FailureAction(Enum):
    ERROR = "error"
    SKIP_SAMPLE = "skip_sample"


@dataclass(frozen=True)
class JacobianInversePolicy:
    """
    How a transform Jacobian is inverted.

    exact_solve rejects matrices whose condition estimate exceeds 1/epsilon;
    pseudo_inverse zeroes singular values below epsilon times the largest one.
    `through_inverse=False` treats J as a constant when differentiating losses.
    """

    mode: InversionMode = InversionMode.EXACT_SOLVE
    epsilon: float = 1e-10
    failure_action: FailureAction = FailureAction.SKIP_SAMPLE
    through_inverse: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, 'mode', InversionMode(self.mode))
        except ValueError:
            raise ConfigError('jacobian_policy.mode', f"unknown mode '{self.mode}'")
        try:
            object.__setattr__(self, 'failure_action', FailureAction(self.failure_action))
        except ValueError:
            raise ConfigError('jacobian_policy.failure_action', f"unknown action '{self.failure_action}'")
        epsilon = float(self.epsilon)
        if not 0.0 <= epsilon < MAX_EPSILON:
            raise ConfigError('jacobian_policy.epsilon', f"must lie in [0, {MAX_EPSILON}), got {epsilon}")
        object.__setattr__(self, 'epsilon', epsilon)

    @classmethod
    def for_training(cls, **overrides) -> "JacobianInversePolicy":
        return cls(**{'failure_action': FailureAction.SKIP_SAMPLE, **overrides})

    @classmethod
    def for_forecasting(cls, **overrides) -> "JacobianInversePolicy":
        return cls(**{'failure_action': FailureAction.ERROR, **overrides})

    @property
    def condition_limit(self) -> float:
        return 1.0 / self.epsilon if self.epsilon > 0 else np.inf

    def with_failure_action(self, action: FailureAction) -> "JacobianInversePolicy":
        return JacobianInversePolicy(self.mode, self.epsilon, action, self.through_inverse)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mode': self.mode.value,
            'epsilon': self.epsilon,
            'failure_action': self.failure_action.value,
            'through_inverse': self.through_inverse,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "JacobianInversePolicy":
        return cls(
            mode=data.get('mode', InversionMode.EXACT_SOLVE.value),
            epsilon=data.get('epsilon', 1e-10),
            failure_action=data.get('failure_action', FailureAction.SKIP_SAMPLE.value),
            through_inverse=bool(data.get('through_inverse', True)),
        )


def condition_numbers(J: np.ndarray) -> np.ndarray:
    """2-norm condition estimates of one matrix or a batch of matrices"""
    J = np.asarray(J, dtype=np.float64)
    try:
        singular_values = np.linalg.svd(J, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailureError(f"SVD did not converge: {exc}")
    largest = singular_values[..., 0]
    smallest = singular_values[..., -1]
    with np.errstate(divide='ignore', invalid='ignore'):
        cond = np.where(smallest > 0, largest / np.where(smallest > 0, smallest, 1.0), np.inf)
    return cond


def usable_samples(J: np.ndarray, policy: JacobianInversePolicy) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mask of Jacobians the policy can invert, with their condition estimates.
    Under pseudo-inversion every finite matrix is usable.
    """
    J = np.asarray(J, dtype=np.float64)
    finite = np.all(np.isfinite(J), axis=(-2, -1))
    safe = np.where(finite[..., None, None], J, 0.0)
    cond = condition_numbers(safe)
    cond = np.where(finite, cond, np.inf)
    if policy.mode == InversionMode.PSEUDO_INVERSE:
        return finite, cond
    return finite & (cond <= policy.condition_limit), cond


def invert_jacobian(J: np.ndarray, policy: JacobianInversePolicy) -> np.ndarray:
    """Invert one Jacobian (d, d) or a batch (B, d, d) under `policy`"""
    J = np.asarray(J, dtype=np.float64)
    if J.ndim < 2 or J.shape[-1] != J.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {J.shape}")
    if not np.all(np.isfinite(J)):
        raise DomainError("Jacobian has non-finite entries")

    if policy.mode == InversionMode.PSEUDO_INVERSE:
        try:
            return np.linalg.pinv(J, rcond=policy.epsilon)
        except np.linalg.LinAlgError as exc:
            raise SvdFailureError(f"SVD did not converge: {exc}")

    cond = condition_numbers(J)
    bad = np.atleast_1d(cond > policy.condition_limit)
    if np.any(bad):
        raise SingularJacobianError(
            "Jacobian is singular under exact solve", np.atleast_1d(cond)[bad].tolist()
        )
    eye = np.broadcast_to(np.eye(J.shape[-1]), J.shape)
    try:
        return np.linalg.solve(J, eye)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobianError(f"Jacobian is singular under exact solve: {exc}")

"""
Error Handling Utilities
One exception hierarchy for the whole package; every class carries the exit code
the CLI reports, so commands can log details and return a stable code.
"""
import logging
import traceback
import uuid
from typing import Optional, Sequence

logger = logging.getLogger(__name__)


class HamiltonetError(Exception):
    """Base class for all package errors"""

    exit_code = 1


class ConfigError(HamiltonetError, ValueError):
    """Invalid experiment or environment configuration"""

    exit_code = 2

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class AutodiffError(HamiltonetError, ValueError):
    """Misuse of the computation tape (unknown leaf, non-scalar gradient, ...)"""


class DomainError(HamiltonetError, ValueError):
    """Numerical domain violation: log of non-positive value, division by zero, ..."""

    exit_code = 3


class InitialConditionError(DomainError):
    """An initial condition lies outside the system's state domain"""

    def __init__(self, trajectory_index: int, message: str):
        self.trajectory_index = trajectory_index
        super().__init__(f"trajectory {trajectory_index}: {message}")


class SingularJacobianError(DomainError):
    """
    Transform Jacobian could not be inverted under the active policy.
    Carries per-sample condition-number estimates for diagnostics.
    """

    def __init__(self, message: str, condition_numbers: Optional[Sequence[float]] = None):
        self.condition_numbers = list(condition_numbers) if condition_numbers is not None else []
        if self.condition_numbers:
            worst = max(self.condition_numbers)
            message = f"{message} (worst condition estimate {worst:.3e})"
        super().__init__(message)


class SvdFailureError(SingularJacobianError):
    """Singular value decomposition did not converge (tagged for outlier rejection)"""


class BatchExhaustedError(SingularJacobianError):
    """Every sample of a batch was dropped by the skip-sample policy"""

    def __init__(self, condition_numbers: Optional[Sequence[float]] = None):
        super().__init__("batch exhausted by singular Jacobians", condition_numbers)


class TrainingExhaustedError(HamiltonetError):
    """No restart survived the outlier filter"""

    exit_code = 4

    def __init__(self, causes: Sequence[str]):
        self.causes = list(causes)
        super().__init__("no surviving training runs: " + "; ".join(self.causes))


class ForecastDivergenceError(HamiltonetError):
    """Every rollout diverged"""

    exit_code = 5


class EnergyScaleError(HamiltonetError, ValueError):
    """Energy series too close to zero for relative drift metrics"""

    def __init__(self, message: str = "energy scale degenerate"):
        super().__init__(message)


def log_and_exit(operation: str, error: Exception) -> int:
    """
    Log error details and return the exit code for the failed command.
    The user sees one line with a reference id; the traceback goes to the debug log.

    Args:
        operation: Description of what operation was being attempted
        error: The exception that was caught

    Returns:
        Process exit code (1 for errors outside the hierarchy)
    """
    error_id = str(uuid.uuid4())[:8]
    exit_code = getattr(error, "exit_code", 1)
    logger.error(f"[{error_id}] {operation} failed: {error}")
    logger.debug(traceback.format_exc())
    return exit_code

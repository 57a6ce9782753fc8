"""
Benchmark System Base - identity, parameters and the common interface of every system
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from hamiltonet.error_utils import ConfigError, DomainError

logger = logging.getLogger(__name__)


class SystemKind(Enum):
    LOTKA_VOLTERRA = "lotka_volterra"
    ELASTIC_PENDULUM = "elastic_pendulum"
    DOUBLE_PENDULUM = "double_pendulum"
    LOTKA_VOLTERRA_CANONICAL = "lotka_volterra_canonical"


DEFAULT_PARAMETERS: Dict[SystemKind, Dict[str, float]] = {
    SystemKind.LOTKA_VOLTERRA: {'alpha': 1.0, 'beta': 1.0, 'gamma': 1.0, 'delta': 1.0},
    SystemKind.LOTKA_VOLTERRA_CANONICAL: {'alpha': 1.0, 'beta': 1.0, 'gamma': 1.0, 'delta': 1.0},
    SystemKind.ELASTIC_PENDULUM: {'m': 1.0, 'g': 1.0, 'k': 4.0, 'l0': 1.0},
    SystemKind.DOUBLE_PENDULUM: {'m1': 1.0, 'm2': 1.0, 'l1': 1.0, 'l2': 1.0, 'g': 1.0},
}

STATE_LABELS: Dict[SystemKind, Tuple[str, ...]] = {
    SystemKind.LOTKA_VOLTERRA: ('n1', 'n2'),
    SystemKind.LOTKA_VOLTERRA_CANONICAL: ('Q', 'P'),
    SystemKind.ELASTIC_PENDULUM: ('l', 'theta', 'l_dot', 'theta_dot'),
    SystemKind.DOUBLE_PENDULUM: ('theta1', 'theta2', 'theta1_dot', 'theta2_dot'),
}


@dataclass(frozen=True)
class SystemSpec:
    """System identity plus named physical parameters; missing parameters take defaults"""

    kind: SystemKind
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, SystemKind) else SystemKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        defaults = DEFAULT_PARAMETERS[kind]
        unknown = set(self.parameters) - set(defaults)
        if unknown:
            raise ConfigError('system.parameters', f"unknown parameters for {kind.value}: {sorted(unknown)}")
        merged = {name: float(self.parameters.get(name, value)) for name, value in defaults.items()}
        for name, value in merged.items():
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f'system.parameters.{name}', f"must be strictly positive, got {value}")
        object.__setattr__(self, 'parameters', merged)

    @property
    def d(self) -> int:
        return len(STATE_LABELS[self.kind])

    @property
    def labels(self) -> Tuple[str, ...]:
        return STATE_LABELS[self.kind]

    def __getitem__(self, name: str) -> float:
        return self.parameters[name]

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'parameters': dict(self.parameters)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemSpec":
        return cls(SystemKind(data['kind']), dict(data.get('parameters') or {}))


class BenchmarkSystem(ABC):
    """
    Ground-truth dynamics. Vector fields and energies accept a single state (d,)
    or a batch (..., d).
    """

    def __init__(self, spec: SystemSpec):
        self.spec = spec

    @property
    def d(self) -> int:
        return self.spec.d

    @abstractmethod
    def vector_field(self, r: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def energy(self, r: np.ndarray) -> np.ndarray:
        """Conserved quantity used for drift metrics"""
        pass

    @abstractmethod
    def sample_initial_conditions(self, n: int, rng: np.random.Generator) -> np.ndarray:
        pass

    def check_state(self, r: np.ndarray) -> None:
        """Raise DomainError when r lies outside the state domain"""
        r = np.asarray(r, dtype=np.float64)
        if r.shape[-1] != self.d:
            raise ValueError(f"state dimension {r.shape[-1]} does not match system dimension {self.d}")
        if not np.all(np.isfinite(r)):
            raise DomainError("non-finite state")

    def in_domain(self, r: np.ndarray) -> bool:
        try:
            self.check_state(r)
        except DomainError:
            return False
        return True

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec.parameters})"


def get_system(spec: SystemSpec) -> BenchmarkSystem:
    """Factory from a spec to its ground-truth system"""
    from hamiltonet.systems.double_pendulum import DoublePendulum
    from hamiltonet.systems.elastic_pendulum import ElasticPendulum
    from hamiltonet.systems.lotka_volterra import LotkaVolterra, LotkaVolterraCanonical

    systems = {
        SystemKind.LOTKA_VOLTERRA: LotkaVolterra,
        SystemKind.LOTKA_VOLTERRA_CANONICAL: LotkaVolterraCanonical,
        SystemKind.ELASTIC_PENDULUM: ElasticPendulum,
        SystemKind.DOUBLE_PENDULUM: DoublePendulum,
    }
    return systems[spec.kind](spec)

"""
Dynamics Model Base - shared interface of the NN, HNN and gHNN families

A model owns one or more networks. Losses and fields are written once against tape
values; the base class supplies numpy conveniences, flat parameter vectors for the
optimizers and checkpoint (de)serialization.
"""
import logging
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from hamiltonet.autodiff import DualValue, Tape, ensure_tape, gradient, ops
from hamiltonet.networks import MlpParams, TapedMlp

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "hamiltonet-checkpoint"
CHECKPOINT_VERSION = 1


class ModelKind(Enum):
    NN = "nn"
    HNN = "hnn"
    GHNN = "ghnn"


@dataclass
class Batch:
    """Training pairs {r, r_dot}, each (B, d)"""

    r: np.ndarray
    r_dot: np.ndarray

    def __post_init__(self):
        self.r = np.atleast_2d(np.asarray(self.r, dtype=np.float64))
        self.r_dot = np.atleast_2d(np.asarray(self.r_dot, dtype=np.float64))
        if self.r.shape != self.r_dot.shape:
            raise ValueError(f"states {self.r.shape} and targets {self.r_dot.shape} differ in shape")

    def __len__(self) -> int:
        return 0 if self.r.size == 0 else self.r.shape[0]

    @property
    def d(self) -> int:
        return self.r.shape[-1]

    def take(self, index) -> "Batch":
        return Batch(self.r[index], self.r_dot[index])


def _leaves_of(value) -> List[DualValue]:
    if isinstance(value, DualValue):
        return [value]
    return list(getattr(value, 'leaves', []) or [])


def is_recorded(*values) -> bool:
    return any(_leaves_of(v) for v in values)


@contextmanager
def recording(*values) -> Iterator[Tape]:
    """The tape the given values live on, else the active tape, else a fresh one"""
    for v in values:
        leaves = _leaves_of(v)
        if leaves:
            yield leaves[0].tape
            return
    with ensure_tape() as tape:
        yield tape


def squared_error(V, target: np.ndarray):
    """Mean over samples of the squared error summed over components"""
    target = np.asarray(target, dtype=np.float64)
    if target.ndim == 1:
        target = target[None, :]
    n = target.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    residual = ops.sub(V, target)
    return ops.div(ops.sum(ops.square(residual)), float(n))


class DynamicsModel(ABC):
    """A learnable vector field r -> r_dot"""

    kind: ModelKind

    def __init__(self, d: int, seed: Optional[int] = None):
        self.d = d
        self.seed = seed

    @abstractmethod
    def networks(self) -> Dict[str, MlpParams]:
        """Sub-networks in a fixed order; the order defines the flat parameter layout"""
        pass

    @abstractmethod
    def with_networks(self, networks: Dict[str, MlpParams]) -> "DynamicsModel":
        pass

    @abstractmethod
    def field_on_tape(self, nets: Dict[str, Any], X) -> Tuple[DualValue, Optional[np.ndarray]]:
        """
        Vector field on a batch recorded on the tape of `nets` or `X`.

        Returns:
            (V, kept) where `kept` indexes the rows of X that V covers (None means all)
        """
        pass

    def learned_hamiltonian(self, r: np.ndarray) -> Optional[np.ndarray]:
        """Learned energy per state, None for models without one"""
        return None

    def bind(self, tape: Tape) -> Dict[str, TapedMlp]:
        return {name: net.bind(tape, prefix=f"{name}.") for name, net in self.networks().items()}

    def loss_on_tape(self, nets: Dict[str, Any], batch: Batch):
        if len(batch) == 0:
            raise ValueError("empty batch")
        self._check_dimension(batch.d)
        V, kept = self.field_on_tape(nets, batch.r)
        target = batch.r_dot if kept is None else batch.r_dot[kept]
        return squared_error(V, target)

    def _check_dimension(self, d: int) -> None:
        if d != self.d:
            raise ValueError(f"data dimension {d} does not match model dimension {self.d}")

    def vector_field(self, r: np.ndarray) -> np.ndarray:
        """Field at one state (d,) or a batch (B, d)"""
        r = np.asarray(r, dtype=np.float64)
        self._check_dimension(r.shape[-1])
        single = r.ndim == 1
        with Tape(name=f"{self.kind.value} field"):
            V, _ = self.field_on_tape(self.networks(), r[None, :] if single else r)
            value = V.value if isinstance(V, DualValue) else np.asarray(V)
        return value[0] if single else value

    def loss(self, batch: Batch) -> float:
        with Tape(name=f"{self.kind.value} loss"):
            value = self.loss_on_tape(self.networks(), batch)
        return float(value.value if isinstance(value, DualValue) else value)

    def loss_and_gradient(self, batch: Batch) -> Tuple[float, np.ndarray]:
        """Loss and its gradient over the flat parameter vector"""
        with Tape(name=f"{self.kind.value} loss") as tape:
            nets = self.bind(tape)
            loss = self.loss_on_tape(nets, batch)
            leaves = [leaf for net in nets.values() for leaf in net.leaves]
            grads = gradient(loss, leaves)
        flat = np.concatenate([g.value.ravel() for g in grads])
        return float(loss.value), flat

    @property
    def parameter_count(self) -> int:
        return sum(net.parameter_count for net in self.networks().values())

    def flat_parameters(self) -> np.ndarray:
        return np.concatenate([net.flatten() for net in self.networks().values()])

    def with_flat_parameters(self, flat: np.ndarray) -> "DynamicsModel":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.parameter_count:
            raise ValueError(f"expected {self.parameter_count} parameters, got {flat.size}")
        networks, pos = {}, 0
        for name, net in self.networks().items():
            networks[name] = net.with_flat(flat[pos:pos + net.parameter_count])
            pos += net.parameter_count
        return self.with_networks(networks)

    def extra_state(self) -> Dict[str, Any]:
        return {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'format': CHECKPOINT_FORMAT,
            'version': CHECKPOINT_VERSION,
            'kind': self.kind.value,
            'd': self.d,
            'seed': self.seed,
            **self.extra_state(),
            'networks': {name: net.to_dict() for name, net in self.networks().items()},
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(d={self.d}, parameters={self.parameter_count})"

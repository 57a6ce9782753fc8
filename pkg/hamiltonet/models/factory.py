"""
Model Factory - builds fresh models from architecture choices and restores checkpoints
"""
import logging
import zlib
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from hamiltonet.models.base import CHECKPOINT_FORMAT, DynamicsModel, ModelKind
from hamiltonet.models.ghnn import GHNNModel
from hamiltonet.models.hnn import HNNModel
from hamiltonet.models.linalg import JacobianInversePolicy
from hamiltonet.models.nn import NNModel
from hamiltonet.networks import ArchitectureKind, ArchitectureSpec, MlpParams, init

logger = logging.getLogger(__name__)


def network_seed(seed: int, name: str) -> int:
    """Independent, reproducible seed per sub-network"""
    sequence = np.random.SeedSequence([int(seed), zlib.crc32(name.encode('utf-8'))])
    return int(sequence.generate_state(1)[0])


def _hidden(hidden: Optional[Mapping[str, Sequence[int]]], name: str):
    if not hidden or name not in hidden:
        return None
    return tuple(int(h) for h in hidden[name])


def build_model(
    kind: ModelKind,
    d: int,
    seed: int = 0,
    hidden: Optional[Mapping[str, Sequence[int]]] = None,
    policy: Optional[JacobianInversePolicy] = None,
    canonical_positions: bool = False,
) -> DynamicsModel:
    """
    Fresh model with the default architectures: NN d:50:50:d, HNN d:200:200:1,
    gHNN transform d:50:50:d followed by Hamiltonian d:200:200:1.

    Args:
        hidden: Optional hidden sizes per network name ('dynamics', 'transform', 'hamiltonian')
    """
    kind = ModelKind(kind)
    if kind == ModelKind.NN:
        spec = ArchitectureSpec(ArchitectureKind.NN, d, _hidden(hidden, 'dynamics'))
        return NNModel(init(spec, network_seed(seed, 'dynamics')), seed)

    hamiltonian_spec = ArchitectureSpec(ArchitectureKind.HNN, d, _hidden(hidden, 'hamiltonian'))
    hamiltonian = init(hamiltonian_spec, network_seed(seed, 'hamiltonian'))
    if kind == ModelKind.HNN:
        return HNNModel(hamiltonian, seed)

    transform_spec = ArchitectureSpec(ArchitectureKind.GHNN_TRANSFORM, d, _hidden(hidden, 'transform'))
    transform = init(transform_spec, network_seed(seed, 'transform'))
    return GHNNModel(transform, hamiltonian, seed, policy, canonical_positions)


def model_from_dict(data: Mapping[str, Any]) -> DynamicsModel:
    if data.get('format') != CHECKPOINT_FORMAT:
        raise ValueError("not a model checkpoint")
    kind = ModelKind(data['kind'])
    networks = {name: MlpParams.from_dict(net) for name, net in data['networks'].items()}
    seed = data.get('seed')
    if kind == ModelKind.NN:
        model = NNModel(networks['dynamics'], seed)
    elif kind == ModelKind.HNN:
        model = HNNModel(networks['hamiltonian'], seed)
    else:
        model = GHNNModel(
            networks['transform'],
            networks['hamiltonian'],
            seed,
            JacobianInversePolicy.from_dict(data.get('policy') or {}),
            bool(data.get('canonical_positions', False)),
        )
    if model.d != int(data['d']):
        raise ValueError(f"checkpoint dimension {data['d']} does not match its networks ({model.d})")
    return model

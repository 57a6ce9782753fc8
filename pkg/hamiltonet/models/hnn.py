"""
Hamiltonian network: a scalar H(R) whose symplectic gradient S dH/dR is the field

Inputs are split half and half into (Q, P) in the given order, whether or not they are
canonical.
"""
from typing import Dict, Optional

import numpy as np

from hamiltonet.autodiff import as_input, gradient, ops
from hamiltonet.models.base import Batch, DynamicsModel, ModelKind, is_recorded, recording, squared_error
from hamiltonet.models.symplectic import SymplecticMatrix
from hamiltonet.networks import MlpParams, forward, forward_numpy


def symplectic_gradient(params, R):
    """S dH/dR for R already on the tape (leaf or intermediate node)"""
    H = forward(params, R)
    grad = gradient(ops.sum(H), R)
    return SymplecticMatrix(R.shape[-1]).apply(grad)


def hnn_vector_field(params, R):
    traced = is_recorded(params, R)
    with recording(params, R) as tape:
        X = as_input(tape, R, name='R')
        V = symplectic_gradient(params, X)
    return V if traced else V.value


def hnn_loss(params, batch: Batch):
    if len(batch) == 0:
        raise ValueError("empty batch")
    traced = is_recorded(params)
    with recording(params) as tape:
        X = tape.leaf(batch.r, name='R')
        loss = squared_error(symplectic_gradient(params, X), batch.r_dot)
    return loss if traced else float(loss.value)


class HNNModel(DynamicsModel):
    kind = ModelKind.HNN

    def __init__(self, hamiltonian: MlpParams, seed: Optional[int] = None):
        super().__init__(hamiltonian.sizes[0], seed)
        if hamiltonian.sizes[-1] != 1:
            raise ValueError(f"Hamiltonian network must have one output, got {hamiltonian.sizes[-1]}")
        SymplecticMatrix(self.d)
        self.hamiltonian = hamiltonian

    def networks(self) -> Dict[str, MlpParams]:
        return {'hamiltonian': self.hamiltonian}

    def with_networks(self, networks):
        return HNNModel(networks['hamiltonian'], self.seed)

    def field_on_tape(self, nets, X):
        return hnn_vector_field(nets['hamiltonian'], X), None

    def learned_hamiltonian(self, r: np.ndarray) -> np.ndarray:
        return forward_numpy(self.hamiltonian, r)[..., 0]

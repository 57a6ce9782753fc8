"""
Baseline dynamics network: the field is the network output itself
"""
from typing import Dict, Optional

from hamiltonet.models.base import Batch, DynamicsModel, ModelKind, is_recorded, recording, squared_error
from hamiltonet.networks import MlpParams, forward


def nn_vector_field(params, r):
    """v_w[r] by a direct forward pass"""
    return forward(params, r)


def nn_loss(params, batch: Batch):
    if len(batch) == 0:
        raise ValueError("empty batch")
    traced = is_recorded(params)
    with recording(params):
        loss = squared_error(nn_vector_field(params, batch.r), batch.r_dot)
    return loss if traced else float(loss)


class NNModel(DynamicsModel):
    kind = ModelKind.NN

    def __init__(self, dynamics: MlpParams, seed: Optional[int] = None):
        super().__init__(dynamics.sizes[0], seed)
        if dynamics.sizes[-1] != dynamics.sizes[0]:
            raise ValueError(f"dynamics network maps {dynamics.sizes[0]} -> {dynamics.sizes[-1]}")
        self.dynamics = dynamics

    def networks(self) -> Dict[str, MlpParams]:
        return {'dynamics': self.dynamics}

    def with_networks(self, networks):
        return NNModel(networks['dynamics'], self.seed)

    def field_on_tape(self, nets, X):
        return nn_vector_field(nets['dynamics'], X), None

"""
Learnable dynamics models: baseline NN, Hamiltonian NN and generalized Hamiltonian NN
"""
from hamiltonet.models.base import Batch, DynamicsModel, ModelKind
from hamiltonet.models.factory import build_model, model_from_dict, network_seed
from hamiltonet.models.ghnn import GHNNModel, GhnnParams, ghnn_loss, ghnn_transform, ghnn_vector_field
from hamiltonet.models.hnn import HNNModel, hnn_loss, hnn_vector_field
from hamiltonet.models.linalg import (
    FailureAction,
    InversionMode,
    JacobianInversePolicy,
    condition_numbers,
    invert_jacobian,
)
from hamiltonet.models.nn import NNModel, nn_loss, nn_vector_field
from hamiltonet.models.symplectic import SymplecticMatrix

__all__ = [
    'Batch',
    'DynamicsModel',
    'ModelKind',
    'build_model',
    'model_from_dict',
    'network_seed',
    'GHNNModel',
    'GhnnParams',
    'ghnn_loss',
    'ghnn_transform',
    'ghnn_vector_field',
    'HNNModel',
    'hnn_loss',
    'hnn_vector_field',
    'FailureAction',
    'InversionMode',
    'JacobianInversePolicy',
    'condition_numbers',
    'invert_jacobian',
    'NNModel',
    'nn_loss',
    'nn_vector_field',
    'SymplecticMatrix',
]

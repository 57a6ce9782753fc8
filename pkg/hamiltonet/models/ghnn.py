"""
Generalized Hamiltonian network: a transform net maps observed coordinates r to latent
canonical coordinates R, a Hamiltonian net supplies H(R), and the observed field is
v = J^-1 S dH/dR with J = dR/dr.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from hamiltonet.autodiff import DualValue, as_input, batch_jacobian, gradient, ops
from hamiltonet.error_utils import BatchExhaustedError, DomainError, SingularJacobianError, SvdFailureError
from hamiltonet.models.base import Batch, DynamicsModel, ModelKind, is_recorded, recording, squared_error
from hamiltonet.models.linalg import FailureAction, InversionMode, JacobianInversePolicy, usable_samples
from hamiltonet.models.symplectic import SymplecticMatrix
from hamiltonet.networks import MlpParams, forward, forward_numpy

logger = logging.getLogger(__name__)


@dataclass
class GhnnParams:
    """
    Transform and Hamiltonian networks. With `canonical_positions` the first d/2 latent
    coordinates copy the observed positions and only the momentum half of the transform
    output is used.
    """

    transform: object
    hamiltonian: object
    canonical_positions: bool = False

    @property
    def leaves(self) -> List[DualValue]:
        return list(getattr(self.transform, 'leaves', [])) + list(getattr(self.hamiltonian, 'leaves', []))


def _latent(params: GhnnParams, X):
    out = forward(params.transform, X)
    if not params.canonical_positions:
        return out
    n = X.shape[-1] // 2
    return ops.concatenate(
        [ops.getitem(X, (slice(None), slice(0, n))), ops.getitem(out, (slice(None), slice(n, 2 * n)))],
        axis=-1,
    )


def _transform_on_tape(params: GhnnParams, X) -> Tuple[DualValue, DualValue]:
    """R (B, d) and per-sample J (B, d, d) for a batch X on the tape"""
    R = _latent(params, X)
    return R, batch_jacobian(R, X)


def ghnn_transform(params: GhnnParams, r):
    """Latent coordinates R and Jacobian dR/dr for one state or a batch"""
    traced = is_recorded(params, r)
    with recording(params, r) as tape:
        X = as_input(tape, r, name='r')
        single = X.ndim == 1
        Xb = ops.reshape(X, (1, X.shape[0])) if single else X
        R, J = _transform_on_tape(params, Xb)
        if single:
            R = ops.reshape(R, R.shape[1:])
            J = ops.reshape(J, J.shape[1:])
    return (R, J) if traced else (R.value, J.value)


def _field_on_tape(params: GhnnParams, X, policy: JacobianInversePolicy):
    """
    Returns:
        (V for the kept rows, kept row indices, condition estimates of all rows)
    """
    d = X.shape[-1]
    R, J = _transform_on_tape(params, X)
    H = forward(params.hamiltonian, R)
    dH = gradient(ops.sum(H), R)
    rhs = SymplecticMatrix(d).apply(dH)

    mask, cond = usable_samples(J.value, policy)
    kept = np.nonzero(mask)[0]
    if len(kept) < len(mask):
        if policy.failure_action == FailureAction.ERROR:
            raise SingularJacobianError(
                f"{len(mask) - len(kept)} of {len(mask)} Jacobians are singular", cond[~mask].tolist()
            )
        if len(kept) == 0:
            raise BatchExhaustedError(cond.tolist())
        J = ops.getitem(J, kept)
        rhs = ops.getitem(rhs, kept)

    if not policy.through_inverse:
        J = ops.stop_gradient(J)

    try:
        if policy.mode == InversionMode.PSEUDO_INVERSE:
            column = ops.reshape(rhs, rhs.shape + (1,))
            V = ops.reshape(ops.matmul(ops.pinv(J, policy.epsilon), column), rhs.shape)
        else:
            V = ops.solve(J, rhs)
    except DomainError as exc:
        if policy.mode == InversionMode.PSEUDO_INVERSE:
            raise SvdFailureError(str(exc), cond.tolist())
        raise SingularJacobianError(str(exc), cond.tolist())
    return V, kept, cond


def ghnn_vector_field(params: GhnnParams, r, policy: Optional[JacobianInversePolicy] = None):
    """
    v = J^-1 S dH/dR(R(r)). Defaults to the forecasting policy, which raises on a
    singular Jacobian; under skip_sample the caller drops samples (only kept rows return).
    """
    policy = policy or JacobianInversePolicy.for_forecasting()
    traced = is_recorded(params, r)
    with recording(params, r) as tape:
        X = as_input(tape, r, name='r')
        single = X.ndim == 1
        Xb = ops.reshape(X, (1, X.shape[0])) if single else X
        V, _, _ = _field_on_tape(params, Xb, policy)
        if single:
            V = ops.reshape(V, V.shape[1:])
    return V if traced else V.value


def ghnn_loss(params: GhnnParams, batch: Batch, policy: Optional[JacobianInversePolicy] = None):
    """
    Mean squared error between r_dot and J^-1 S dH/dR; inputs may equally be any
    observables (u, v). Samples with singular Jacobians are dropped under skip_sample.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    policy = policy or JacobianInversePolicy.for_training()
    traced = is_recorded(params)
    with recording(params) as tape:
        X = tape.leaf(batch.r, name='r')
        V, kept, cond = _field_on_tape(params, X, policy)
        if len(kept) < len(batch):
            logger.debug(f"Skipped {len(batch) - len(kept)} samples with singular Jacobians")
        loss = squared_error(V, batch.r_dot[kept])
    return loss if traced else float(loss.value)


class GHNNModel(DynamicsModel):
    kind = ModelKind.GHNN

    def __init__(
        self,
        transform: MlpParams,
        hamiltonian: MlpParams,
        seed: Optional[int] = None,
        policy: Optional[JacobianInversePolicy] = None,
        canonical_positions: bool = False,
    ):
        super().__init__(transform.sizes[0], seed)
        if transform.sizes[-1] != self.d:
            raise ValueError(f"transform network maps {self.d} -> {transform.sizes[-1]}")
        if hamiltonian.sizes[0] != self.d or hamiltonian.sizes[-1] != 1:
            raise ValueError(f"Hamiltonian network has sizes {hamiltonian.sizes}, expected {self.d} -> 1")
        SymplecticMatrix(self.d)
        self.transform = transform
        self.hamiltonian = hamiltonian
        self.policy = policy or JacobianInversePolicy.for_training()
        self.canonical_positions = canonical_positions

    @property
    def params(self) -> GhnnParams:
        return GhnnParams(self.transform, self.hamiltonian, self.canonical_positions)

    def networks(self) -> Dict[str, MlpParams]:
        return {'transform': self.transform, 'hamiltonian': self.hamiltonian}

    def with_networks(self, networks):
        return GHNNModel(
            networks['transform'], networks['hamiltonian'], self.seed, self.policy, self.canonical_positions
        )

    def with_policy(self, policy: JacobianInversePolicy) -> "GHNNModel":
        return GHNNModel(self.transform, self.hamiltonian, self.seed, policy, self.canonical_positions)

    def field_on_tape(self, nets, X):
        params = GhnnParams(nets['transform'], nets['hamiltonian'], self.canonical_positions)
        with recording(params, X) as tape:
            Xl = as_input(tape, X, name='r')
            V, kept, _ = _field_on_tape(params, Xl, self.policy)
        return V, (None if len(kept) == Xl.shape[0] else kept)

    def vector_field(self, r: np.ndarray) -> np.ndarray:
        """Field under this model's inversion settings, raising on singular Jacobians"""
        forecasting = self.with_policy(self.policy.with_failure_action(FailureAction.ERROR))
        return DynamicsModel.vector_field(forecasting, r)

    def latent(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        out = forward_numpy(self.transform, r)
        if not self.canonical_positions:
            return out
        n = self.d // 2
        return np.concatenate([r[..., :n], out[..., n:]], axis=-1)

    def learned_hamiltonian(self, r: np.ndarray) -> np.ndarray:
        return forward_numpy(self.hamiltonian, self.latent(r))[..., 0]

    def extra_state(self):
        return {'policy': self.policy.to_dict(), 'canonical_positions': self.canonical_positions}

"""
Lotka-Volterra - predator/prey populations and their exponential canonicalization

In raw populations (n1, n2) the conserved pseudo-energy does not generate the motion;
in Q = log n1, P = log n2 the same function is a true Hamiltonian.
"""
from typing import Tuple

import numpy as np

from hamiltonet.autodiff import ops
from hamiltonet.error_utils import DomainError
from hamiltonet.systems.base import BenchmarkSystem, SystemSpec

IC_RANGE = (0.3, 3.0)


def _rates(spec: SystemSpec) -> Tuple[float, float, float, float]:
    p = spec.parameters
    return p['alpha'], p['beta'], p['gamma'], p['delta']


def _populations(state) -> np.ndarray:
    r = np.asarray(state, dtype=np.float64)
    if r.shape[-1] != 2:
        raise ValueError(f"Lotka-Volterra state has 2 components, got {r.shape[-1]}")
    if np.any(r <= 0):
        raise DomainError(f"populations must be strictly positive, got min {np.min(r):.6g}")
    return r


def lv_vector_field(spec: SystemSpec, state) -> np.ndarray:
    alpha, beta, gamma, delta = _rates(spec)
    r = _populations(state)
    n1, n2 = r[..., 0], r[..., 1]
    return np.stack([alpha * n1 - beta * n1 * n2, -gamma * n2 + delta * n1 * n2], axis=-1)


def lv_pseudo_energy(spec: SystemSpec, state) -> np.ndarray:
    alpha, beta, gamma, delta = _rates(spec)
    r = _populations(state)
    n1, n2 = r[..., 0], r[..., 1]
    return alpha * np.log(n2) - beta * n2 + gamma * np.log(n1) - delta * n1


def lv_hamiltonian(spec: SystemSpec, Q, P):
    """H = alpha P - beta e^P + gamma Q - delta e^Q; accepts arrays or tape values"""
    alpha, beta, gamma, delta = _rates(spec)
    return ops.add(
        ops.sub(ops.mul(alpha, P), ops.mul(beta, ops.exp(P))),
        ops.sub(ops.mul(gamma, Q), ops.mul(delta, ops.exp(Q))),
    )


def lv_canonical_oracle(spec: SystemSpec, state) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Q, P, H) at a physical point. Validation only."""
    r = _populations(state)
    Q, P = np.log(r[..., 0]), np.log(r[..., 1])
    return Q, P, lv_hamiltonian(spec, Q, P)


def lv_canonical_vector_field(spec: SystemSpec, state) -> np.ndarray:
    alpha, beta, gamma, delta = _rates(spec)
    R = np.asarray(state, dtype=np.float64)
    Q, P = R[..., 0], R[..., 1]
    return np.stack([alpha - beta * np.exp(P), -gamma + delta * np.exp(Q)], axis=-1)


def _log_uniform(n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = np.log(IC_RANGE[0]), np.log(IC_RANGE[1])
    return np.exp(rng.uniform(lo, hi, size=(n, 2)))


class LotkaVolterra(BenchmarkSystem):
    def vector_field(self, r):
        return lv_vector_field(self.spec, r)

    def energy(self, r):
        return lv_pseudo_energy(self.spec, r)

    def check_state(self, r):
        super().check_state(r)
        _populations(r)

    def sample_initial_conditions(self, n, rng):
        return _log_uniform(n, rng)


class LotkaVolterraCanonical(BenchmarkSystem):
    """Lotka-Volterra in (Q, P) = (log n1, log n2)"""

    def vector_field(self, r):
        return lv_canonical_vector_field(self.spec, r)

    def energy(self, r):
        R = np.asarray(r, dtype=np.float64)
        return lv_hamiltonian(self.spec, R[..., 0], R[..., 1])

    def sample_initial_conditions(self, n, rng):
        return np.log(_log_uniform(n, rng))


def to_canonical(states: np.ndarray, derivatives: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Map (n, n_dot) samples to (Q, P) and (Q_dot, P_dot) = n_dot / n"""
    n = _populations(states)
    return np.log(n), np.asarray(derivatives, dtype=np.float64) / n


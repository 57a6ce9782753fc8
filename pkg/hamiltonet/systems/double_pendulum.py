"""
Double Pendulum - two rigid links, state (theta1, theta2, theta1_dot, theta2_dot)

The angular accelerations solve the 2x2 mass-matrix system from the Euler-Lagrange
equations; only librations (bounded swings) are sampled.
"""
import logging
from typing import Tuple

import numpy as np

from hamiltonet.autodiff import ops
from hamiltonet.error_utils import DomainError
from hamiltonet.systems.base import BenchmarkSystem, SystemSpec

logger = logging.getLogger(__name__)

ANGLE_RANGE = (-0.8, 0.8)
MAX_REJECTIONS = 10000


def _params(spec: SystemSpec) -> Tuple[float, float, float, float, float]:
    p = spec.parameters
    return p['m1'], p['m2'], p['l1'], p['l2'], p['g']


def _checked(state) -> np.ndarray:
    r = np.asarray(state, dtype=np.float64)
    if r.shape[-1] != 4:
        raise ValueError(f"double pendulum state has 4 components, got {r.shape[-1]}")
    return r


def dp_mass_matrix(spec: SystemSpec, state) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entries (M11, M12, M22) of the symmetric mass matrix"""
    m1, m2, l1, l2, _ = _params(spec)
    r = _checked(state)
    cos_delta = np.cos(r[..., 0] - r[..., 1])
    m11 = (m1 + m2) * l1 ** 2 * np.ones_like(cos_delta)
    m12 = m2 * l1 * l2 * cos_delta
    m22 = m2 * l2 ** 2 * np.ones_like(cos_delta)
    return m11, m12, m22


def dp_vector_field(spec: SystemSpec, state) -> np.ndarray:
    m1, m2, l1, l2, g = _params(spec)
    r = _checked(state)
    th1, th2, w1, w2 = r[..., 0], r[..., 1], r[..., 2], r[..., 3]
    sin_delta = np.sin(th1 - th2)
    m11, m12, m22 = dp_mass_matrix(spec, r)
    rhs1 = -m2 * l1 * l2 * w2 ** 2 * sin_delta - (m1 + m2) * g * l1 * np.sin(th1)
    rhs2 = m2 * l1 * l2 * w1 ** 2 * sin_delta - m2 * g * l2 * np.sin(th2)
    det = m11 * m22 - m12 ** 2
    acc1 = (rhs1 * m22 - m12 * rhs2) / det
    acc2 = (m11 * rhs2 - m12 * rhs1) / det
    return np.stack([w1, w2, acc1, acc2], axis=-1)


def dp_energy(spec: SystemSpec, state) -> np.ndarray:
    m1, m2, l1, l2, g = _params(spec)
    r = _checked(state)
    th1, th2, w1, w2 = r[..., 0], r[..., 1], r[..., 2], r[..., 3]
    kinetic = (
        0.5 * (m1 + m2) * l1 ** 2 * w1 ** 2
        + 0.5 * m2 * l2 ** 2 * w2 ** 2
        + m2 * l1 * l2 * w1 * w2 * np.cos(th1 - th2)
    )
    potential = -(m1 + m2) * g * l1 * np.cos(th1) - m2 * g * l2 * np.cos(th2)
    return kinetic + potential


def dp_conjugate_momenta(spec: SystemSpec, state) -> np.ndarray:
    """Validation only: neither momentum is mass times velocity"""
    m1, m2, l1, l2, _ = _params(spec)
    r = _checked(state)
    th1, th2, w1, w2 = r[..., 0], r[..., 1], r[..., 2], r[..., 3]
    cross = m2 * l1 * l2 * np.cos(th1 - th2)
    p1 = (m1 + m2) * l1 ** 2 * w1 + cross * w2
    p2 = m2 * l2 ** 2 * w2 + cross * w1
    return np.stack([p1, p2], axis=-1)


def dp_lagrangian(spec: SystemSpec, q, q_dot):
    """Lagrangian of one configuration q = (theta1, theta2); accepts arrays or tape values"""
    m1, m2, l1, l2, g = _params(spec)
    th1, th2 = q[0], q[1]
    w1, w2 = q_dot[0], q_dot[1]
    cos_delta = ops.cos(ops.sub(th1, th2))
    kinetic = ops.add(
        ops.add(
            ops.mul(0.5 * (m1 + m2) * l1 ** 2, ops.square(w1)),
            ops.mul(0.5 * m2 * l2 ** 2, ops.square(w2)),
        ),
        ops.mul(m2 * l1 * l2, ops.mul(ops.mul(w1, w2), cos_delta)),
    )
    potential = ops.neg(ops.add(
        ops.mul((m1 + m2) * g * l1, ops.cos(th1)),
        ops.mul(m2 * g * l2, ops.cos(th2)),
    ))
    return ops.sub(kinetic, potential)


def dp_libration_threshold(spec: SystemSpec) -> float:
    """Energies below this keep the outer link from going over the top"""
    m1, m2, l1, l2, g = _params(spec)
    rest_energy = -(m1 + m2) * g * l1 - m2 * g * l2
    return rest_energy + m2 * g * l2


class DoublePendulum(BenchmarkSystem):
    def vector_field(self, r):
        return dp_vector_field(self.spec, r)

    def energy(self, r):
        return dp_energy(self.spec, r)

    def conjugate_momenta(self, r):
        return dp_conjugate_momenta(self.spec, r)

    def lagrangian(self, q, q_dot):
        return dp_lagrangian(self.spec, q, q_dot)

    def sample_initial_conditions(self, n, rng):
        threshold = dp_libration_threshold(self.spec)
        accepted = []
        attempts = 0
        while len(accepted) < n:
            attempts += 1
            if attempts > MAX_REJECTIONS:
                raise DomainError(
                    f"could not sample {n} librational initial conditions in {MAX_REJECTIONS} draws"
                )
            angles = rng.uniform(*ANGLE_RANGE, size=2)
            candidate = np.array([angles[0], angles[1], 0.0, 0.0])
            if dp_energy(self.spec, candidate) < threshold:
                accepted.append(candidate)
        if attempts > n:
            logger.debug(f"Rejected {attempts - n} rotational double-pendulum samples")
        return np.array(accepted)

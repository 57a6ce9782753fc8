"""
Elastic Pendulum - a mass on a spring swinging in a plane, state (l, theta, l_dot, theta_dot)

Equations of motion follow from the Euler-Lagrange equations of
L = 1/2 m (l_dot^2 + l^2 theta_dot^2) + m g l cos(theta) - 1/2 k (l - l0)^2.
"""
from typing import Tuple

import numpy as np

from hamiltonet.autodiff import ops
from hamiltonet.error_utils import DomainError
from hamiltonet.systems.base import BenchmarkSystem, SystemSpec

LENGTH_RANGE = (0.8, 1.6)
ANGLE_RANGE = (-1.0, 1.0)


def _params(spec: SystemSpec) -> Tuple[float, float, float, float]:
    p = spec.parameters
    return p['m'], p['g'], p['k'], p['l0']


def _checked(state) -> np.ndarray:
    r = np.asarray(state, dtype=np.float64)
    if r.shape[-1] != 4:
        raise ValueError(f"elastic pendulum state has 4 components, got {r.shape[-1]}")
    if np.any(r[..., 0] <= 0):
        raise DomainError(f"pendulum length must be strictly positive, got {np.min(r[..., 0]):.6g}")
    return r


def ep_vector_field(spec: SystemSpec, state) -> np.ndarray:
    m, g, k, l0 = _params(spec)
    r = _checked(state)
    l, theta, l_dot, theta_dot = r[..., 0], r[..., 1], r[..., 2], r[..., 3]
    l_ddot = l * theta_dot ** 2 + g * np.cos(theta) - (k / m) * (l - l0)
    theta_ddot = -(g * np.sin(theta) + 2.0 * l_dot * theta_dot) / l
    return np.stack([l_dot, theta_dot, l_ddot, theta_ddot], axis=-1)


def ep_energy(spec: SystemSpec, state) -> np.ndarray:
    m, g, k, l0 = _params(spec)
    r = _checked(state)
    l, theta, l_dot, theta_dot = r[..., 0], r[..., 1], r[..., 2], r[..., 3]
    kinetic = 0.5 * m * (l_dot ** 2 + l ** 2 * theta_dot ** 2)
    return kinetic - m * g * l * np.cos(theta) + 0.5 * k * (l - l0) ** 2


def ep_conjugate_momenta(spec: SystemSpec, state) -> np.ndarray:
    """(p_l, p_theta) = (m l_dot, m l^2 theta_dot). Validation only."""
    m = spec.parameters['m']
    r = _checked(state)
    return np.stack([m * r[..., 2], m * r[..., 0] ** 2 * r[..., 3]], axis=-1)


def ep_lagrangian(spec: SystemSpec, q, q_dot):
    """Lagrangian of one configuration q = (l, theta); accepts arrays or tape values"""
    m, g, k, l0 = _params(spec)
    l, theta = q[0], q[1]
    l_dot, theta_dot = q_dot[0], q_dot[1]
    kinetic = ops.mul(0.5 * m, ops.add(ops.square(l_dot), ops.mul(ops.square(l), ops.square(theta_dot))))
    potential = ops.sub(
        ops.mul(0.5 * k, ops.square(ops.sub(l, l0))),
        ops.mul(m * g, ops.mul(l, ops.cos(theta))),
    )
    return ops.sub(kinetic, potential)


class ElasticPendulum(BenchmarkSystem):
    def vector_field(self, r):
        return ep_vector_field(self.spec, r)

    def energy(self, r):
        return ep_energy(self.spec, r)

    def conjugate_momenta(self, r):
        return ep_conjugate_momenta(self.spec, r)

    def lagrangian(self, q, q_dot):
        return ep_lagrangian(self.spec, q, q_dot)

    def check_state(self, r):
        super().check_state(r)
        _checked(r)

    def sample_initial_conditions(self, n, rng):
        l = rng.uniform(*LENGTH_RANGE, size=n)
        theta = rng.uniform(*ANGLE_RANGE, size=n)
        return np.stack([l, theta, np.zeros(n), np.zeros(n)], axis=-1)

"""
Lagrangian Oracles - equations of motion and Euler-Lagrange residuals by automatic
differentiation, independent of the hand-derived vector fields
"""
from typing import Callable

import numpy as np

from hamiltonet.autodiff import Tape, gradient, jacobian, ops
from hamiltonet.systems.finite_difference import finite_difference_derivatives

Lagrangian = Callable[..., object]


def _split(r: np.ndarray):
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 1 or r.shape[0] % 2:
        raise ValueError(f"expected a single state with an even number of components, got {r.shape}")
    n = r.shape[0] // 2
    return r[:n], r[n:]


def lagrangian_acceleration(lagrangian: Lagrangian, q: np.ndarray, q_dot: np.ndarray) -> np.ndarray:
    """
    Solve the Euler-Lagrange equations for q_ddot:
    M q_ddot = dL/dq - C q_dot with M = d2L/dq_dot2 and C = d2L/dq_dot dq.
    """
    with Tape(name='lagrangian') as tape:
        Q = tape.leaf(q, name='q')
        V = tape.leaf(q_dot, name='q_dot')
        L = lagrangian(Q, V)
        momenta = gradient(L, V)
        force = gradient(L, Q)
        mass = jacobian(momenta, V)
        coupling = jacobian(momenta, Q)
        acc = ops.solve(mass, ops.sub(force, ops.matmul(coupling, V)))
    return acc.value


def lagrangian_vector_field(lagrangian: Lagrangian, r: np.ndarray) -> np.ndarray:
    q, q_dot = _split(r)
    return np.concatenate([q_dot, lagrangian_acceleration(lagrangian, q, q_dot)])


def lagrangian_momenta(lagrangian: Lagrangian, r: np.ndarray) -> np.ndarray:
    """Conjugate momenta dL/dq_dot"""
    q, q_dot = _split(r)
    with Tape(name='momenta') as tape:
        Q = tape.leaf(q)
        V = tape.leaf(q_dot)
        p = gradient(lagrangian(Q, V), V)
    return p.value


def lagrangian_force(lagrangian: Lagrangian, r: np.ndarray) -> np.ndarray:
    q, q_dot = _split(r)
    with Tape(name='force') as tape:
        Q = tape.leaf(q)
        V = tape.leaf(q_dot)
        f = gradient(lagrangian(Q, V), Q)
    return f.value


def euler_lagrange_residual(lagrangian: Lagrangian, states: np.ndarray, dt: float) -> np.ndarray:
    """
    d/dt(dL/dq_dot) - dL/dq along a sampled trajectory (K, d), the time derivative taken by
    finite differences. Zero up to differencing error on true trajectories.
    """
    states = np.asarray(states, dtype=np.float64)
    momenta = np.array([lagrangian_momenta(lagrangian, r) for r in states])
    forces = np.array([lagrangian_force(lagrangian, r) for r in states])
    return finite_difference_derivatives(momenta, dt) - forces

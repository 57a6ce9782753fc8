"""
Shared fixtures and finite-difference helpers
"""
import os

import numpy as np
import pytest

from hamiltonet.networks import MlpParams
from hamiltonet.systems import SystemKind, SystemSpec, generate_dataset
from hamiltonet.training import TrainConfig

FD_STEP = 1e-5


def pytest_collection_modifyitems(config, items):
    if os.getenv('HAMILTONET_RUN_SLOW') == '1':
        return
    skip_slow = pytest.mark.skip(reason="set HAMILTONET_RUN_SLOW=1 to run desk-scale experiments")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


def fd_gradient(f, x, eps=FD_STEP):
    """Central-difference gradient of a scalar numpy function"""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        up, down = x.copy(), x.copy()
        up[i] += eps
        down[i] -= eps
        grad[i] = (f(up) - f(down)) / (2 * eps)
    return grad


def fd_jacobian(f, x, eps=FD_STEP):
    """Central-difference Jacobian (m, n) of a vector numpy function"""
    x = np.array(x, dtype=np.float64)
    columns = []
    for i in range(x.size):
        up, down = x.copy(), x.copy()
        up[i] += eps
        down[i] -= eps
        columns.append((np.asarray(f(up)) - np.asarray(f(down))) / (2 * eps))
    return np.stack(columns, axis=-1)


def relative_error(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def random_mlp(sizes, seed=0, scale=0.5):
    """Small network with non-zero biases so every layer matters"""
    rng = np.random.default_rng(seed)
    weights = [scale * rng.standard_normal((o, i)) for i, o in zip(sizes[:-1], sizes[1:])]
    biases = [0.1 * rng.standard_normal(o) for o in sizes[1:]]
    return MlpParams(tuple(sizes), weights, biases)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def one_layer_hamiltonian():
    """
    H(R) = w2 . tanh(W1 R + b1) + b2 with hand-set weights; the gradient is
    W1^T (w2 * (1 - tanh(z)^2)).
    """
    W1 = np.array([[0.7, -0.2], [0.1, 0.5], [-0.4, 0.3]])
    b1 = np.array([0.05, -0.1, 0.2])
    w2 = np.array([[1.5, -0.8, 0.6]])
    b2 = np.array([0.3])
    return MlpParams((2, 3, 1), [W1, w2], [b1, b2])


def one_layer_gradient(params, R):
    W1, w2, b1 = params.weights[0], params.weights[1][0], params.biases[0]
    z = np.asarray(R) @ W1.T + b1
    return (w2 * (1 - np.tanh(z) ** 2)) @ W1


@pytest.fixture
def lv_spec():
    return SystemSpec(SystemKind.LOTKA_VOLTERRA)


@pytest.fixture(scope='session')
def lv_dataset():
    spec = SystemSpec(SystemKind.LOTKA_VOLTERRA)
    return generate_dataset(spec, n_traj=4, t_span=(0.0, 2.0), dt=0.1, seed=0, substeps=10)


@pytest.fixture
def tiny_train_config():
    return TrainConfig(
        learning_rate=1e-2,
        batch_size=32,
        steps=30,
        seed=0,
        restarts=1,
        log_every=10,
        hidden={'dynamics': [8], 'hamiltonian': [8], 'transform': [8]},
    )

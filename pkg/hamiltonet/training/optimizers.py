"""
Optimizers - plain SGD and Adam over flat parameter vectors, with optional norm clipping
"""
from abc import ABC, abstractmethod
from enum import Enum
from typing import Optional

import numpy as np


class OptimizerKind(Enum):
    SGD = "sgd"
    ADAM = "adam"


def clip_by_norm(vector: np.ndarray, max_norm: Optional[float]) -> np.ndarray:
    """Rescale `vector` so its Euclidean norm is at most `max_norm`"""
    if not max_norm:
        return vector
    norm = float(np.linalg.norm(vector))
    if norm > max_norm:
        return vector * (max_norm / norm)
    return vector


class Optimizer(ABC):
    """
    Gradient clipping acts on the global gradient norm; the resulting update is then
    bounded by learning_rate * clip_norm so no step moves parameters further than that.
    """

    def __init__(self, learning_rate: float, clip_norm: Optional[float] = None):
        if not learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        self.learning_rate = learning_rate
        self.clip_norm = clip_norm or None
        self.iterations = 0

    @abstractmethod
    def _update(self, grad: np.ndarray) -> np.ndarray:
        """Parameter increment for an already clipped gradient"""
        pass

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(grad)):
            raise ValueError("refusing to apply a non-finite gradient")
        self.iterations += 1
        update = self._update(clip_by_norm(grad, self.clip_norm))
        if self.clip_norm:
            update = clip_by_norm(update, self.learning_rate * self.clip_norm)
        return params - update


class SGD(Optimizer):
    def _update(self, grad):
        return self.learning_rate * grad


class Adam(Optimizer):
    def __init__(
        self,
        learning_rate: float = 1e-3,
        clip_norm: Optional[float] = None,
        beta_1: float = 0.9,
        beta_2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        super().__init__(learning_rate, clip_norm)
        self.beta_1 = beta_1
        self.beta_2 = beta_2
        self.epsilon = epsilon
        self.m: Optional[np.ndarray] = None
        self.v: Optional[np.ndarray] = None

    def _update(self, grad):
        if self.m is None:
            self.m = np.zeros_like(grad)
            self.v = np.zeros_like(grad)
        t = self.iterations
        self.m = self.beta_1 * self.m + (1.0 - self.beta_1) * grad
        self.v = self.beta_2 * self.v + (1.0 - self.beta_2) * grad ** 2
        m_hat = self.m / (1.0 - self.beta_1 ** t)
        v_hat = self.v / (1.0 - self.beta_2 ** t)
        return self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def make_optimizer(kind: OptimizerKind, learning_rate: float, clip_norm: Optional[float] = None) -> Optimizer:
    kind = OptimizerKind(kind)
    if kind == OptimizerKind.SGD:
        return SGD(learning_rate, clip_norm)
    return Adam(learning_rate, clip_norm)

"""
Symplectic Matrix - S = [[0, I], [-I, 0]] in (Q, P) block order
"""
import numpy as np

from hamiltonet.autodiff import DualValue, ops


class SymplecticMatrix:
    """Applies S to gradients without materialising the matrix"""

    def __init__(self, d: int):
        if d < 2 or d % 2:
            raise ValueError(f"symplectic structure needs an even phase dimension, got {d}")
        self.d = d
        self.n = d // 2

    @property
    def matrix(self) -> np.ndarray:
        n = self.n
        eye, zero = np.eye(n), np.zeros((n, n))
        return np.block([[zero, eye], [-eye, zero]])

    def apply(self, grad):
        """S @ grad along the last axis: (dH/dP, -dH/dQ)"""
        ndim = grad.ndim if isinstance(grad, DualValue) else np.ndim(grad)
        if (grad.shape[-1] if isinstance(grad, DualValue) else np.shape(grad)[-1]) != self.d:
            raise ValueError(f"gradient dimension does not match symplectic dimension {self.d}")
        lead = (slice(None),) * (ndim - 1)
        q_part = ops.getitem(grad, lead + (slice(0, self.n),))
        p_part = ops.getitem(grad, lead + (slice(self.n, self.d),))
        return ops.concatenate([p_part, ops.neg(q_part)], axis=-1)

    def __repr__(self) -> str:
        return f"SymplecticMatrix(d={self.d})"

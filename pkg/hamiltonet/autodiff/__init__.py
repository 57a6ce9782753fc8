"""
Reverse-mode automatic differentiation with differentiable backward passes
"""
from hamiltonet.autodiff.tape import DualValue, Tape, as_input, current_tape, ensure_tape
from hamiltonet.autodiff import ops
from hamiltonet.autodiff.derivatives import batch_jacobian, gradient, jacobian, vjp

__all__ = [
    'DualValue',
    'Tape',
    'as_input',
    'current_tape',
    'ensure_tape',
    'ops',
    'gradient',
    'jacobian',
    'vjp',
    'batch_jacobian',
]

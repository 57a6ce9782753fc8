"""
Feed-forward networks used by every model family
"""
from hamiltonet.networks.mlp import (
    ArchitectureKind,
    ArchitectureSpec,
    MlpParams,
    TapedMlp,
    forward,
    forward_numpy,
    init,
)

__all__ = [
    'ArchitectureKind',
    'ArchitectureSpec',
    'MlpParams',
    'TapedMlp',
    'forward',
    'forward_numpy',
    'init',
]

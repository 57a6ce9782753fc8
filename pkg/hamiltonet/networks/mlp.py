"""
Feed-forward Networks - tanh hidden layers with a linear output layer

Parameters are plain numpy arrays outside training; `bind` registers them as tape
leaves so that losses can be differentiated with respect to every weight and bias.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from hamiltonet.autodiff import DualValue, Tape, ops
from hamiltonet.io_utils import format_row, parse_row

logger = logging.getLogger(__name__)


class ArchitectureKind(Enum):
    NN = "nn"
    HNN = "hnn"
    GHNN_TRANSFORM = "ghnn_transform"


DEFAULT_HIDDEN: Dict[ArchitectureKind, Tuple[int, ...]] = {
    ArchitectureKind.NN: (50, 50),
    ArchitectureKind.HNN: (200, 200),
    ArchitectureKind.GHNN_TRANSFORM: (50, 50),
}


@dataclass(frozen=True)
class ArchitectureSpec:
    """Architecture of one network: d:hidden...:d for NN and transforms, d:hidden...:1 for HNN"""

    kind: ArchitectureKind
    d: int
    hidden: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"phase dimension must be positive, got {self.d}")
        if self.kind != ArchitectureKind.NN and self.d % 2:
            raise ValueError(f"{self.kind.value} needs an even phase dimension, got {self.d}")
        if self.hidden is not None and any(h < 1 for h in self.hidden):
            raise ValueError(f"hidden sizes must be positive, got {self.hidden}")

    @property
    def hidden_sizes(self) -> Tuple[int, ...]:
        return tuple(self.hidden) if self.hidden is not None else DEFAULT_HIDDEN[self.kind]

    @property
    def layer_sizes(self) -> Tuple[int, ...]:
        out = 1 if self.kind == ArchitectureKind.HNN else self.d
        return (self.d, *self.hidden_sizes, out)


@dataclass
class TapedMlp:
    """Network parameters registered as leaves of one tape"""

    sizes: Tuple[int, ...]
    weights: List[DualValue]
    biases: List[DualValue]
    linear_output: bool = True

    @property
    def leaves(self) -> List[DualValue]:
        out: List[DualValue] = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


@dataclass
class MlpParams:
    """
    Weights are stored out x in, biases as vectors; layer l maps sizes[l] -> sizes[l+1].
    Hidden layers use tanh; the last layer is linear unless `linear_output` is False.
    """

    sizes: Tuple[int, ...]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    linear_output: bool = True
    seed: Optional[int] = None

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2:
            raise ValueError("a network needs at least an input and an output layer")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.sizes) - 1:
            raise ValueError(
                f"expected {len(self.sizes) - 1} layers, got {len(self.weights)} weights "
                f"and {len(self.biases)} biases"
            )
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.sizes[l + 1], self.sizes[l])
            if w.shape != expected:
                raise ValueError(f"layer {l}: weight shape {w.shape}, expected {expected}")
            if b.shape != (self.sizes[l + 1],):
                raise ValueError(f"layer {l}: bias shape {b.shape}, expected ({self.sizes[l + 1]},)")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def activations(self) -> List[str]:
        acts = ['tanh'] * self.n_layers
        if self.linear_output:
            acts[-1] = 'linear'
        return acts

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.extend([w.ravel(), b.ravel()])
        return np.concatenate(parts)

    def with_flat(self, flat: np.ndarray) -> "MlpParams":
        """Copy with parameters replaced from a flat vector in `flatten` order"""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.parameter_count:
            raise ValueError(f"expected {self.parameter_count} parameters, got {flat.size}")
        weights, biases, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(flat[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
            biases.append(flat[pos:pos + b.size].copy())
            pos += b.size
        return MlpParams(self.sizes, weights, biases, self.linear_output, self.seed)

    def bind(self, tape: Tape, prefix: str = '') -> TapedMlp:
        weights = [tape.leaf(w, name=f"{prefix}w{l}") for l, w in enumerate(self.weights)]
        biases = [tape.leaf(b, name=f"{prefix}b{l}") for l, b in enumerate(self.biases)]
        return TapedMlp(self.sizes, weights, biases, self.linear_output)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sizes': list(self.sizes),
            'activations': self.activations,
            'seed': self.seed,
            'layers': [
                {
                    'weight': [format_row(row) for row in w],
                    'bias': format_row(b),
                }
                for w, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MlpParams":
        sizes = tuple(data['sizes'])
        weights, biases = [], []
        for l, layer in enumerate(data['layers']):
            rows = [parse_row(r) for r in layer['weight']]
            w = np.array(rows, dtype=np.float64).reshape(sizes[l + 1], sizes[l])
            weights.append(w)
            biases.append(parse_row(layer['bias']))
        activations = data.get('activations') or []
        linear_output = not activations or activations[-1] == 'linear'
        return cls(sizes, weights, biases, linear_output=linear_output, seed=data.get('seed'))

    @classmethod
    def linear(cls, matrix: np.ndarray, bias: Optional[np.ndarray] = None) -> "MlpParams":
        """Single linear layer x -> matrix @ x + bias (identity and permutation transforms)"""
        matrix = np.array(matrix, dtype=np.float64)
        out_dim, in_dim = matrix.shape
        bias = np.zeros(out_dim) if bias is None else np.array(bias, dtype=np.float64)
        return cls((in_dim, out_dim), [matrix], [bias], linear_output=True)


def init(spec: ArchitectureSpec, seed: int) -> MlpParams:
    """Glorot-uniform weights in +/- sqrt(6 / (fan_in + fan_out)), zero biases"""
    rng = np.random.default_rng(seed)
    sizes = spec.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    params = MlpParams(sizes, weights, biases, linear_output=True, seed=seed)
    logger.debug(f"Initialized {spec.kind.value} network {sizes} ({params.parameter_count} parameters)")
    return params


def _check_input(sizes: Sequence[int], x) -> None:
    shape = x.shape if isinstance(x, DualValue) else np.shape(x)
    if len(shape) == 0 or shape[-1] != sizes[0]:
        raise ValueError(f"input dimension {shape[-1] if shape else 0} does not match first layer {sizes[0]}")


def forward(params, x):
    """
    Evaluate the network on a vector (d_in,) or a batch (B, d_in).

    `params` is either MlpParams (numpy weights) or a TapedMlp; with a tape-bound network
    or a recorded input the result is recorded on that tape.
    """
    _check_input(params.sizes, x)
    a = x
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = ops.add(ops.matmul(a, ops.transpose(w)), b)
        a = z if (l == last and params.linear_output) else ops.tanh(z)
    return a


def forward_numpy(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Straight-line evaluation without the tape"""
    _check_input(params.sizes, x)
    a = np.asarray(x, dtype=np.float64)
    for l in range(params.n_layers):
        z = a @ params.weights[l].T + params.biases[l]
        if l == params.n_layers - 1 and params.linear_output:
            a = z
        else:
            a = np.tanh(z)
    return a

"""
Computation Tape - Records operations on float64 arrays for reverse-mode differentiation

Every recorded node keeps its parents and one vector-Jacobian function per parent.
The vector-Jacobian functions are themselves built from recorded operations, so a
gradient produced by a backward pass lives on the same tape and can be differentiated
again (second order by double traversal).
"""
import itertools
import threading
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from hamiltonet.error_utils import AutodiffError

_local = threading.local()


def _tape_stack() -> List["Tape"]:
    if not hasattr(_local, 'tapes'):
        _local.tapes = []
    return _local.tapes


class DualValue:
    """
    A value recorded on a tape.

    `value` is a float64 array (0-d for scalars). Leaves are inputs and parameters;
    constants are untracked data lifted onto the tape; every other node was produced
    by a primitive operation.
    """

    __slots__ = ('value', 'parents', 'vjps', 'compute', 'node_id', 'tape', 'kind', 'name')

    # numpy defers to our reflected operators instead of broadcasting over objects
    __array_ufunc__ = None
    __array_priority__ = 1000

    def __init__(
        self,
        tape: "Tape",
        node_id: int,
        value: np.ndarray,
        parents: Tuple["DualValue", ...] = (),
        compute: Optional[Callable[..., np.ndarray]] = None,
        kind: str = 'op',
        name: Optional[str] = None,
    ):
        self.tape = tape
        self.node_id = node_id
        self.value = value
        self.parents = parents
        self.vjps: Tuple[Callable[["DualValue"], "DualValue"], ...] = ()
        self.compute = compute
        self.kind = kind
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def T(self) -> "DualValue":
        return ops.transpose(self)

    def sum(self, axis=None, keepdims: bool = False) -> "DualValue":
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "DualValue":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def __len__(self) -> int:
        return len(self.value)

    def __repr__(self) -> str:
        label = self.name or self.kind
        return f"DualValue(#{self.node_id} {label}, shape={self.shape}, value={self.value!r})"

    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __rtruediv__(self, other):
        return ops.div(other, self)

    def __neg__(self):
        return ops.neg(self)

    def __pow__(self, exponent):
        return ops.power(self, exponent)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        return ops.matmul(other, self)

    def __getitem__(self, index):
        return ops.getitem(self, index)


class Tape:
    """
    Ordered record of operations. Node ids are positions in `nodes`, so the recording
    order is a valid topological order.

    Usage:
        with Tape() as tape:
            x = tape.leaf(2.0)
            y = x * x
            dy = gradient(y, x)
    """

    _ids = itertools.count()

    def __init__(self, name: Optional[str] = None):
        self.tape_id = next(Tape._ids)
        self.name = name
        self.nodes: List[DualValue] = []
        self.leaves: Dict[int, DualValue] = {}

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        return False

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node: object) -> bool:
        return (
            isinstance(node, DualValue)
            and node.tape is self
            and node.node_id < len(self.nodes)
            and self.nodes[node.node_id] is node
        )

    def _append(self, node_factory: Callable[[int], DualValue]) -> DualValue:
        node = node_factory(len(self.nodes))
        self.nodes.append(node)
        return node

    def leaf(self, value, name: Optional[str] = None) -> DualValue:
        """Register an input or parameter"""
        array = np.array(value, dtype=np.float64)
        node = self._append(lambda i: DualValue(self, i, array, kind='leaf', name=name))
        self.leaves[node.node_id] = node
        return node

    def constant(self, value) -> DualValue:
        array = np.asarray(value, dtype=np.float64)
        return self._append(lambda i: DualValue(self, i, array, kind='const'))

    def record(
        self,
        name: str,
        value: np.ndarray,
        parents: Sequence[DualValue],
        compute: Callable[..., np.ndarray],
    ) -> DualValue:
        """Append the result of a primitive; the caller attaches `vjps` afterwards"""
        return self._append(
            lambda i: DualValue(self, i, value, tuple(parents), compute=compute, name=name)
        )

    def replay(self) -> None:
        """Re-evaluate every recorded operation in order from the current leaf values"""
        for node in self.nodes:
            if node.compute is not None:
                node.value = node.compute(*[p.value for p in node.parents])


def current_tape() -> Optional[Tape]:
    stack = _tape_stack()
    return stack[-1] if stack else None


@contextmanager
def ensure_tape() -> Iterator[Tape]:
    """Reuse the active tape, or open a fresh one for the duration of the block"""
    tape = current_tape()
    if tape is not None:
        yield tape
        return
    with Tape() as fresh:
        yield fresh


def as_input(tape: Tape, x, name: str = 'input') -> DualValue:
    """Return `x` if already recorded on `tape`, otherwise register it as a leaf"""
    if isinstance(x, DualValue):
        if x.tape is not tape:
            raise AutodiffError("value recorded on a different tape")
        return x
    return tape.leaf(x, name=name)


from hamiltonet.autodiff import ops  # noqa: E402  (operators above resolve at call time)
